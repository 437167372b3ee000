#include <string>
#include <vector>

#include "adc/cli.hpp"

int main(int argc, char** argv) {
  return adc::cli::dispatch(std::vector<std::string>(argv, argv + argc));
}
