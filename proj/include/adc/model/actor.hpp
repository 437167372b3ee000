#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "adc/model/dims.hpp"
#include "adc/nn/adam.hpp"
#include "adc/nn/gru.hpp"
#include "adc/nn/ln_lstm.hpp"
#include "adc/nn/ops.hpp"
#include "adc/text/vocabulary.hpp"

namespace adc {

struct ActorState {
  Vector h_g;
  Vector h_l;
  Vector c_l;
  int t = 0;
  TokenId prev_token = Vocabulary::kStart;
};

/// One sampled caption a_1..a_T with the distributions it was drawn from.
struct EpisodeTrace {
  Tokens tokens;
  std::vector<double> log_probs;
  std::vector<Vector> step_probs;
  bool terminated_by_end = false;

  std::size_t length() const { return tokens.size(); }
  Tokens surface() const { return strip_end(tokens); }
};

/// Policy network: features -> W_x (+layer norm, ReLU) -> GRU -> LN-LSTM -> psi -> softmax.
/// The projected feature vector primes the GRU once; afterwards each step
/// embeds the previous token.
class Actor {
 public:
  Actor() = default;

  Actor(const ModelDims& dims, Rng& rng) : dims_(dims) {
    dims.validate();
    const long H = dims.hidden;
    proj_ = Linear::create(store_, "proj", dims.feature_dim, H, rng);
    proj_norm_ = LayerNorm::create(store_, "proj_norm", H);
    embed_ = Embedding::create(store_, "embed", dims.vocab_size, H, rng);
    gru_ = GruCell::create(store_, "gru", H, H, rng);
    lstm_ = LnLstmCell::create(store_, "lstm", H, H, rng);
    out_ = Linear::create(store_, "out", H, dims.vocab_size, rng);
  }

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// f = relu(norm(W_x features)); one GRU step from a zero hidden state.
  ActorState init_state(const Vector& features) const {
    require_length("actor features", features.size(), dims_.feature_dim);
    if (!features.allFinite()) throw ValidationError("actor: non-finite features");
    const Vector f = relu(proj_norm_.forward(store_, proj_.forward(store_, features), nullptr));
    ActorState s;
    s.h_g = gru_.forward(store_, f, Vector::Zero(dims_.hidden));
    s.h_l = Vector::Zero(dims_.hidden);
    s.c_l = Vector::Zero(dims_.hidden);
    return s;
  }

  std::pair<Vector, ActorState> step(const ActorState& state, bool training = false,
                                     Rng* rng = nullptr) const {
    embed_.check(state.prev_token);
    ActorState next;
    next.h_g = gru_.forward(store_, embed_.forward(store_, state.prev_token), state.h_g);
    auto lo = lstm_.forward(store_, next.h_g, state.h_l, state.c_l, dims_.dropout, training, rng);
    next.h_l = std::move(lo.h);
    next.c_l = std::move(lo.c);
    next.t = state.t + 1;
    next.prev_token = state.prev_token;
    return {softmax(out_.forward(store_, next.h_l)), std::move(next)};
  }

  /// Multinomial sampling until the end token or t_max tokens.
  EpisodeTrace sample_caption(const Vector& features, int t_max, Rng& rng) const {
    if (t_max < 1) throw ValidationError("sample_caption: T_max must be >= 1");
    EpisodeTrace trace;
    ActorState s = init_state(features);
    for (int t = 0; t < t_max; ++t) {
      auto [probs, next] = step(s);
      const TokenId a = draw(probs, rng.uniform());
      trace.tokens.push_back(a);
      trace.log_probs.push_back(std::log(probs[a]));
      trace.step_probs.push_back(std::move(probs));
      s = std::move(next);
      s.prev_token = a;
      if (a == Vocabulary::kEnd) {
        trace.terminated_by_end = true;
        break;
      }
    }
    return trace;
  }

  /// Argmax decoding (lowest id on ties); the end token is not returned.
  Tokens greedy_decode(const Vector& features, int t_max) const {
    return strip_end(greedy_tokens(features, t_max));
  }

  /// Greedy decode keeping the end token when it was emitted.
  Tokens greedy_tokens(const Vector& features, int t_max) const {
    if (t_max < 1) throw ValidationError("greedy_decode: T_max must be >= 1");
    Tokens out;
    ActorState s = init_state(features);
    for (int t = 0; t < t_max; ++t) {
      auto [probs, next] = step(s);
      TokenId best = 0;
      for (long k = 1; k < probs.size(); ++k)
        if (probs[k] > probs[best]) best = static_cast<TokenId>(k);
      out.push_back(best);
      if (best == Vocabulary::kEnd) break;
      s = std::move(next);
      s.prev_token = best;
    }
    return out;
  }

  /// Teacher-forced sum of log pi(targets_t | prefix), no gradients.
  double log_prob(const Vector& features, const Tokens& targets) const {
    double sum = 0.0;
    ActorState s = init_state(features);
    for (TokenId a : targets) {
      auto [probs, next] = step(s);
      embed_.check(a);
      sum += std::log(probs[a]);
      s = std::move(next);
      s.prev_token = a;
    }
    return sum;
  }

  /// Smallest |pre-activation| at the projection ReLU.
  double relu_margin(const Vector& features) const {
    require_length("actor features", features.size(), dims_.feature_dim);
    return proj_norm_.forward(store_, proj_.forward(store_, features), nullptr).cwiseAbs().minCoeff();
  }

  /// Teacher-forced sum_t weights_t * (-log pi(targets_t)); accumulates the
  /// gradient into params(). Inputs are <start>, targets_1..targets_{T-1}.
  double weighted_nll(const Vector& features, const Tokens& targets, const std::vector<double>& weights,
                      bool training = false, Rng* rng = nullptr) {
    require_length("actor targets", static_cast<long>(weights.size()), static_cast<long>(targets.size()));
    require_length("actor features", features.size(), dims_.feature_dim);
    const long H = dims_.hidden;
    const std::size_t T = targets.size();

    LayerNormCache proj_ln;
    const Vector pre = proj_.forward(store_, features);
    const Vector normed = proj_norm_.forward(store_, pre, &proj_ln);
    const Vector f = relu(normed);
    GruCell::Cache prime;
    Vector h_g = gru_.forward(store_, f, Vector::Zero(H), &prime);

    std::vector<GruCell::Cache> gru_c(T);
    std::vector<LnLstmCell::Cache> lstm_c(T);
    std::vector<Vector> h_l_out(T), probs(T);
    std::vector<TokenId> inputs(T);
    Vector h_l = Vector::Zero(H), c_l = Vector::Zero(H);
    double loss = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      inputs[t] = t == 0 ? Vocabulary::kStart : targets[t - 1];
      embed_.check(targets[t]);
      h_g = gru_.forward(store_, embed_.forward(store_, inputs[t]), h_g, &gru_c[t]);
      auto lo = lstm_.forward(store_, h_g, h_l, c_l, dims_.dropout, training, rng, &lstm_c[t]);
      h_l = std::move(lo.h);
      c_l = std::move(lo.c);
      const Vector logits = out_.forward(store_, h_l);
      const Vector logp = log_softmax(logits);
      loss -= weights[t] * logp[targets[t]];
      probs[t] = logp.array().exp().matrix();
      h_l_out[t] = h_l;
    }

    Vector dh_g = Vector::Zero(H), dh_l = Vector::Zero(H), dc_l = Vector::Zero(H);
    for (std::size_t k = T; k-- > 0;) {
      Vector dlogits = probs[k];
      dlogits[targets[k]] -= 1.0;
      dlogits *= weights[k];
      dh_l += out_.backward(store_, h_l_out[k], dlogits);
      auto lg = lstm_.backward(store_, lstm_c[k], dh_l, dc_l);
      dh_l = std::move(lg.dh);
      dc_l = std::move(lg.dc);
      dh_g += lg.dx;
      auto gg = gru_.backward(store_, gru_c[k], dh_g);
      embed_.backward(store_, inputs[k], gg.dx);
      dh_g = std::move(gg.dh);
    }
    const Vector df = gru_.backward(store_, prime, dh_g).dx;
    const Vector dnormed = df.cwiseProduct((normed.array() > 0.0).cast<double>().matrix());
    const Vector dpre = proj_norm_.backward(store_, proj_ln, dnormed);
    proj_.backward(store_, features, dpre);
    return loss;
  }

  /// Mean teacher-forced negative log-likelihood of a caption ending in <end>.
  double nll_pretrain_loss(const Vector& features, const Tokens& caption, bool training = false,
                           Rng* rng = nullptr) {
    if (caption.empty()) throw ValidationError("nll_pretrain_loss: empty caption");
    if (caption.back() != Vocabulary::kEnd)
      throw ValidationError("nll_pretrain_loss: caption must end with the end token");
    const std::vector<double> w(caption.size(), 1.0 / static_cast<double>(caption.size()));
    return weighted_nll(features, caption, w, training, rng);
  }

  /// Inverse-CDF draw from a distribution given u in [0, 1).
  static TokenId draw(const Vector& probs, double u) {
    double cum = 0.0;
    TokenId last_positive = 0;
    for (long k = 0; k < probs.size(); ++k) {
      if (probs[k] > 0.0) last_positive = static_cast<TokenId>(k);
      cum += probs[k];
      if (u < cum) return static_cast<TokenId>(k);
    }
    return last_positive;
  }

 private:
  ModelDims dims_;
  ParamStore store_;
  Linear proj_;
  LayerNorm proj_norm_;
  Embedding embed_;
  GruCell gru_;
  LnLstmCell lstm_;
  Linear out_;
};

/// One Adam ascent step on sum_t A_t log pi(a_t | s_{t-1}) (advantages are
/// constants). Runs the policy in evaluation mode, matching sampling.
/// Returns the policy loss -sum_t A_t log pi(a_t).
inline double reinforce_update(Actor& actor, const Vector& features, const EpisodeTrace& trace,
                               const std::vector<double>& advantages, const AdamConfig& cfg, int epoch) {
  if (advantages.size() != trace.length())
    throw ValidationError("reinforce_update: " + std::to_string(advantages.size()) +
                          " advantages for a trace of length " + std::to_string(trace.length()));
  if (trace.length() == 0) return 0.0;
  actor.params().zero_grad();
  // weighted_nll gives sum_t A_t * (-log pi), the negated objective.
  const double loss = actor.weighted_nll(features, trace.tokens, advantages);
  adam_step(actor.params(), cfg, epoch);
  return loss;
}

}  // namespace adc
