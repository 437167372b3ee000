#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "adc/error.hpp"
#include "adc/nn/param_store.hpp"
#include "adc/nn/rng.hpp"

namespace adc {

/// Computes the loss for the current parameter values and accumulates its
/// gradient into the store's grad buffers.
using LossFn = std::function<double(ParamStore&)>;

struct GradCheckOptions {
  double h = 1e-3;
  int coords_per_param = 12;  // sampled coordinates per parameter; <= 0 checks all
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  long worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  int checked = 0;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

/// Compares analytic gradients with central differences on a sampled subset
/// of coordinates.
inline GradCheckResult grad_check(const LossFn& loss_fn, ParamStore& store,
                                  const GradCheckOptions& opts = {}) {
  if (!(opts.h > 0.0)) throw ValidationError("grad_check: h must be positive");
  store.zero_grad();
  const double base = loss_fn(store);
  if (!std::isfinite(base)) throw NumericsError("grad_check: non-finite loss");
  std::vector<Matrix> analytic;
  analytic.reserve(store.size());
  for (const auto& p : store.params()) analytic.push_back(p.grad);

  Rng rng(opts.seed);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < store.size(); ++pi) {
    ParamMatrix& p = store.at(pi);
    const long n = p.value.size();
    if (n == 0) continue;
    std::vector<long> coords;
    if (opts.coords_per_param <= 0 || n <= opts.coords_per_param) {
      for (long i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int k = 0; k < opts.coords_per_param; ++k)
        coords.push_back(static_cast<long>(rng.below(static_cast<std::size_t>(n))));
    }
    for (long i : coords) {
      double& theta = p.value.data()[i];
      const double saved = theta;
      theta = saved + opts.h;
      const double plus = loss_fn(store);
      theta = saved - opts.h;
      const double minus = loss_fn(store);
      theta = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus))
        throw NumericsError("grad_check: non-finite loss while perturbing '" + p.name + "'");
      const double numeric = (plus - minus) / (2.0 * opts.h);
      const double err = relative_error(analytic[pi].data()[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
        result.worst_analytic = analytic[pi].data()[i];
        result.worst_numeric = numeric;
      }
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace adc
