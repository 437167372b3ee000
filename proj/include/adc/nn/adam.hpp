#pragma once

#include <cmath>

#include "adc/error.hpp"
#include "adc/nn/param_store.hpp"

namespace adc {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay_factor = 0.9;  // multiplied into lr every `decay_every` epochs
  int decay_every = 10;

  void validate() const {
    if (!(lr > 0.0)) throw ValidationError("adam: lr must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0)) throw ValidationError("adam: beta1 must lie in (0, 1)");
    if (!(beta2 > 0.0 && beta2 < 1.0)) throw ValidationError("adam: beta2 must lie in (0, 1)");
    if (!(eps > 0.0)) throw ValidationError("adam: eps must be positive");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
      throw ValidationError("adam: decay_factor must lie in (0, 1]");
    if (decay_every < 1) throw ValidationError("adam: decay_every must be >= 1");
  }

  double effective_lr(int epoch) const {
    return lr * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
  }
};

/// One bias-corrected Adam update over every parameter in the store, then
/// clears the gradients. A store whose gradients are all exactly zero is left
/// untouched (values, moments and step count), so zero-advantage updates are
/// the identity.
inline void adam_step(ParamStore& store, const AdamConfig& cfg, int epoch) {
  if (epoch < 0) throw ValidationError("adam: epoch must be >= 0");
  bool any_nonzero = false;
  for (const auto& p : store.params()) {
    if (!p.grad.allFinite()) throw NumericsError("non-finite gradient in parameter '" + p.name + "'");
    if (!any_nonzero && (p.grad.array() != 0.0).any()) any_nonzero = true;
  }
  if (!any_nonzero) return;

  store.set_step_count(store.step_count() + 1);
  const double t = static_cast<double>(store.step_count());
  const double lr = cfg.effective_lr(epoch);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < store.size(); ++i) {
    ParamMatrix& p = store.at(i);
    Matrix& m = store.adam_m(i);
    Matrix& v = store.adam_v(i);
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * p.grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
  }
  store.zero_grad();
}

}  // namespace adc
