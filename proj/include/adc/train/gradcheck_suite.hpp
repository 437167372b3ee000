#pragma once

#include <string>
#include <vector>

#include "adc/model/actor.hpp"
#include "adc/model/encdec_critic.hpp"
#include "adc/model/value_critic.hpp"
#include "adc/nn/grad_check.hpp"
#include "adc/nn/gru.hpp"
#include "adc/nn/ln_lstm.hpp"
#include "adc/nn/ops.hpp"

namespace adc {

struct GradCheckEntry {
  std::string name;
  GradCheckResult result;
};

namespace detail {

/// Smooth scalar readout sum_i c_i y_i + 0.5 y_i^2; returns dL/dy.
inline double readout(const Vector& y, const Vector& c, Vector& dy) {
  dy = c + y;
  return c.dot(y) + 0.5 * y.squaredNorm();
}

inline Vector random_vector(long n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (long i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

inline void randomize(ParamStore& store, Rng& rng, double scale) {
  for (auto& p : store.params())
    for (long i = 0; i < p.value.size(); ++i) p.value.data()[i] = rng.uniform(-scale, scale);
}

// Networks are redrawn with O(1) weights: at the default init the layer
// norms see small-variance inputs and the curvature swamps h = 1e-3.
constexpr double kNetScale = 1.0;
constexpr double kReluMargin = 0.05;
constexpr int kMaxDraws = 64;

inline Actor draw_actor(const ModelDims& dims, const Vector& features, Rng& rng) {
  for (int i = 0;; ++i) {
    Actor a(dims, rng);
    randomize(a.params(), rng, kNetScale);
    if (a.relu_margin(features) > kReluMargin || i + 1 == kMaxDraws) return a;
  }
}

inline EncDecCritic draw_encdec(const ModelDims& dims, const Vector& features, const Tokens& caption, Rng& rng) {
  for (int i = 0;; ++i) {
    EncDecCritic c(dims, rng);
    randomize(c.params(), rng, kNetScale);
    if (c.relu_margin(features, caption) > kReluMargin || i + 1 == kMaxDraws) return c;
  }
}

}  // namespace detail

/// Finite-difference checks of every layer and every network loss on small
/// random configurations (hidden <= 8). Inputs are registered as parameters
/// so their gradients are checked too.
inline std::vector<GradCheckEntry> run_gradcheck_suite(std::uint64_t seed, const GradCheckOptions& base = {},
                                                       ModelDims dims = {5, 9, 6, 0.2}) {
  std::vector<GradCheckEntry> out;
  GradCheckOptions opts = base;
  opts.seed = seed;
  Rng rng(seed);

  {  // linear
    ParamStore s;
    Linear lin = Linear::create(s, "lin", 5, 4, rng);
    ParamId x = s.add_uniform("x", 5, 1, 1, rng);
    const Vector c = detail::random_vector(4, rng);
    auto loss = [&](ParamStore& st) {
      const Vector xv = st.vec(x);
      Vector dy;
      const double l = detail::readout(lin.forward(st, xv), c, dy);
      st.grad_vec(x) += lin.backward(st, xv, dy);
      return l;
    };
    out.push_back({"linear", grad_check(loss, s, opts)});
  }
  {  // layer_norm
    ParamStore s;
    LayerNorm ln = LayerNorm::create(s, "ln", 6);
    detail::randomize(s, rng, detail::kNetScale);
    ParamId x = s.add_uniform("x", 6, 1, 1, rng);
    const Vector c = detail::random_vector(6, rng);
    auto loss = [&](ParamStore& st) {
      LayerNormCache cache;
      Vector dy;
      const double l = detail::readout(ln.forward(st, st.vec(x), &cache), c, dy);
      st.grad_vec(x) += ln.backward(st, cache, dy);
      return l;
    };
    out.push_back({"layer_norm", grad_check(loss, s, opts)});
  }
  {  // gru_step
    ParamStore s;
    GruCell cell = GruCell::create(s, "gru", 5, 6, rng);
    detail::randomize(s, rng, detail::kNetScale);
    ParamId x = s.add_uniform("x", 5, 1, 1, rng);
    ParamId h = s.add_uniform("h", 6, 1, 1, rng);
    const Vector c = detail::random_vector(6, rng);
    auto loss = [&](ParamStore& st) {
      GruCell::Cache cache;
      Vector dy;
      const double l = detail::readout(cell.forward(st, st.vec(x), st.vec(h), &cache), c, dy);
      auto g = cell.backward(st, cache, dy);
      st.grad_vec(x) += g.dx;
      st.grad_vec(h) += g.dh;
      return l;
    };
    out.push_back({"gru_step", grad_check(loss, s, opts)});
  }
  {  // ln_lstm_step, evaluation mode
    ParamStore s;
    LnLstmCell cell = LnLstmCell::create(s, "lstm", 5, 6, rng);
    detail::randomize(s, rng, detail::kNetScale);
    ParamId x = s.add_uniform("x", 5, 1, 1, rng);
    ParamId h = s.add_uniform("h", 6, 1, 1, rng);
    ParamId cst = s.add_uniform("c", 6, 1, 1, rng);
    const Vector ch = detail::random_vector(6, rng);
    const Vector cc = detail::random_vector(6, rng);
    auto loss = [&](ParamStore& st) {
      LnLstmCell::Cache cache;
      auto o = cell.forward(st, st.vec(x), st.vec(h), st.vec(cst), 0.2, false, nullptr, &cache);
      Vector dh, dc;
      const double l = detail::readout(o.h, ch, dh) + detail::readout(o.c, cc, dc);
      auto g = cell.backward(st, cache, dh, dc);
      st.grad_vec(x) += g.dx;
      st.grad_vec(h) += g.dh;
      st.grad_vec(cst) += g.dc;
      return l;
    };
    out.push_back({"ln_lstm_step", grad_check(loss, s, opts)});
  }

  const Vector features = detail::random_vector(dims.feature_dim, rng);
  const Tokens caption = {4, 7, 5, 8, Vocabulary::kEnd};
  {  // actor teacher-forced NLL
    Actor actor = detail::draw_actor(dims, features, rng);
    auto loss = [&](ParamStore&) { return actor.nll_pretrain_loss(features, caption); };
    out.push_back({"actor_nll", grad_check(loss, actor.params(), opts)});
  }
  {  // actor REINFORCE objective -sum A_t log pi
    Actor actor = detail::draw_actor(dims, features, rng);
    const std::vector<double> adv = {0.7, -0.3, 0.2, 1.1, -0.5};
    auto loss = [&](ParamStore&) { return actor.weighted_nll(features, caption, adv); };
    out.push_back({"actor_reinforce", grad_check(loss, actor.params(), opts)});
  }
  {  // value critic mean Huber episode loss
    ValueCritic critic(dims, rng);
    detail::randomize(critic.params(), rng, detail::kNetScale);
    auto loss = [&](ParamStore&) { return critic.episode_loss(features, caption, 0.35); };
    out.push_back({"value_huber", grad_check(loss, critic.params(), opts)});
  }
  {  // encoder-decoder reconstruction MSE (target held fixed)
    EncDecCritic critic = detail::draw_encdec(dims, features, caption, rng);
    const Vector target = critic.project(features);
    auto loss = [&](ParamStore&) { return critic.recon_loss_to_target(features, caption, target); };
    out.push_back({"encdec_recon", grad_check(loss, critic.params(), opts)});
  }
  return out;
}

}  // namespace adc
