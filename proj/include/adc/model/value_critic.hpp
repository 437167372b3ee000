#pragma once

#include <cmath>
#include <vector>

#include "adc/model/dims.hpp"
#include "adc/nn/gru.hpp"
#include "adc/nn/ops.hpp"

namespace adc {

inline constexpr double kHuberDelta = 0.5;

/// Huber variant with a quadratic branch d^2 for d <= 0.5 and linear branch
/// 0.5 d - 0.125 beyond. Note the jump at the knee (0.25 vs 0.125).
inline double huber_loss(double v, double target) {
  const double d = std::abs(v - target);
  return d <= kHuberDelta ? d * d : kHuberDelta * d - 0.5 * kHuberDelta * kHuberDelta;
}

/// d huber_loss / d v.
inline double huber_grad(double v, double target) {
  const double diff = v - target;
  if (std::abs(diff) <= kHuberDelta) return 2.0 * diff;
  return diff > 0.0 ? kHuberDelta : -kHuberDelta;
}

/// Value network V(s_t): hidden state initialized from the features, a GRU
/// over the sampled tokens and a tanh scalar head.
class ValueCritic {
 public:
  ValueCritic() = default;

  ValueCritic(const ModelDims& dims, Rng& rng) : dims_(dims) {
    dims.validate();
    const long H = dims.hidden;
    proj_ = Linear::create(store_, "proj", dims.feature_dim, H, rng);
    embed_ = Embedding::create(store_, "embed", dims.vocab_size, H, rng);
    gru_ = GruCell::create(store_, "gru", H, H, rng);
    head_ = Linear::create(store_, "head", H, 1, rng);
  }

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// v_0..v_{T-1}; v_t is read after consuming a_1..a_t.
  std::vector<double> values(const Vector& features, const Tokens& tokens) const {
    return run(features, tokens, nullptr);
  }

  /// Mean Huber loss of every v_t against r_T; accumulates gradients.
  double episode_loss(const Vector& features, const Tokens& tokens, double reward) {
    Trace tr;
    const std::vector<double> v = run(features, tokens, &tr);
    const std::size_t T = v.size();
    const double scale = 1.0 / static_cast<double>(T);
    double loss = 0.0;
    Vector dh = Vector::Zero(dims_.hidden);
    for (std::size_t k = T; k-- > 0;) {
      loss += huber_loss(v[k], reward) * scale;
      Vector dv(1);
      dv[0] = huber_grad(v[k], reward) * scale * (1.0 - v[k] * v[k]);
      dh += head_.backward(store_, tr.hidden[k], dv);
      if (k > 0) {
        auto g = gru_.backward(store_, tr.gru[k - 1], dh);
        embed_.backward(store_, tokens[k - 1], g.dx);
        dh = std::move(g.dh);
      }
    }
    const Vector dpre = dh.cwiseProduct((1.0 - tr.hidden[0].array().square()).matrix());
    proj_.backward(store_, features, dpre);
    return loss;
  }

 private:
  struct Trace {
    std::vector<Vector> hidden;  // hidden[t] feeds v_t
    std::vector<GruCell::Cache> gru;
  };

  std::vector<double> run(const Vector& features, const Tokens& tokens, Trace* tr) const {
    if (tokens.empty()) throw ValidationError("value critic: empty token sequence");
    require_length("value critic features", features.size(), dims_.feature_dim);
    for (TokenId a : tokens) embed_.check(a);
    const std::size_t T = tokens.size();
    std::vector<double> v(T);
    Vector h = tanh(proj_.forward(store_, features));
    if (tr) {
      tr->hidden.assign(T, Vector());
      tr->gru.assign(T > 0 ? T - 1 : 0, GruCell::Cache{});
    }
    for (std::size_t t = 0; t < T; ++t) {
      if (t > 0) h = gru_.forward(store_, embed_.forward(store_, tokens[t - 1]), h, tr ? &tr->gru[t - 1] : nullptr);
      v[t] = std::tanh(head_.forward(store_, h)[0]);
      if (tr) tr->hidden[t] = h;
    }
    return v;
  }

  ModelDims dims_;
  ParamStore store_;
  Linear proj_;
  Embedding embed_;
  GruCell gru_;
  Linear head_;
};

}  // namespace adc
