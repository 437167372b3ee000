#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace adc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using TokenId = std::int32_t;
using Tokens = std::vector<TokenId>;

}  // namespace adc
