#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "adc/error.hpp"

namespace adc {

struct RngState {
  std::uint64_t seed = 0;
  std::string algorithm = "mt19937_64";
};

/// Seeded generator. All draws are derived from raw engine output so the
/// stream depends only on the engine state, which can be saved and restored.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}
  explicit Rng(const RngState& state) : Rng(state.seed) {
    if (state.algorithm != "mt19937_64")
      throw ValidationError("unsupported rng algorithm '" + state.algorithm + "'");
  }

  RngState state() const { return {seed_, "mt19937_64"}; }

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; no cached second value.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[below(i)]);
  }

  std::string serialize() const {
    std::ostringstream out;
    out << seed_ << ' ' << engine_;
    return out.str();
  }

  static Rng deserialize(const std::string& text) {
    std::istringstream in(text);
    Rng rng;
    in >> rng.seed_ >> rng.engine_;
    if (!in) throw ParseError("corrupt rng state");
    return rng;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace adc
