#pragma once

#include <string>

#include "adc/nn/ops.hpp"

namespace adc {

/// LSTM cell with layer normalization on the input and recurrent
/// pre-activations and on the cell state (Ba et al. placement).
///   a  = LN_x(W x) + LN_h(U h) + b            gates [i; f; g; o]
///   c' = sigmoid(f) * c + sigmoid(i) * tanh(g)
///   h' = sigmoid(o) * tanh(LN_c(c'))
/// Inverted dropout on h' in training mode.
struct LnLstmCell {
  ParamId w;
  ParamId u;
  ParamId b;
  LayerNorm ln_x;
  LayerNorm ln_h;
  LayerNorm ln_c;
  long input = 0;
  long hidden = 0;

  struct Cache {
    Vector x, h, c;
    LayerNormCache lx, lh, lc;
    Vector i, f, g, o, tanh_c;
    Vector mask;  // empty when no dropout was applied
  };

  struct Output {
    Vector h;
    Vector c;
  };

  static LnLstmCell create(ParamStore& store, const std::string& name, long input, long hidden,
                           Rng& rng) {
    LnLstmCell cell;
    cell.input = input;
    cell.hidden = hidden;
    cell.w = store.add_uniform(name + ".w", 4 * hidden, input, input, rng);
    cell.u = store.add_uniform(name + ".u", 4 * hidden, hidden, hidden, rng);
    cell.b = store.add_uniform(name + ".b", 4 * hidden, 1, hidden, rng);
    cell.ln_x = LayerNorm::create(store, name + ".ln_x", 4 * hidden);
    cell.ln_h = LayerNorm::create(store, name + ".ln_h", 4 * hidden);
    cell.ln_c = LayerNorm::create(store, name + ".ln_c", hidden);
    return cell;
  }

  Output forward(const ParamStore& store, const Vector& x, const Vector& h, const Vector& c,
                 double dropout_rate, bool training, Rng* rng, Cache* cache = nullptr) const {
    require_length("ln_lstm_step input", x.size(), input);
    require_length("ln_lstm_step hidden", h.size(), hidden);
    require_length("ln_lstm_step cell", c.size(), hidden);
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
      throw ValidationError("ln_lstm_step: dropout rate must lie in [0, 1)");
    const long H = hidden;
    Cache local;
    Cache& k = cache ? *cache : local;

    const Vector a = ln_x.forward(store, store.value(w) * x, &k.lx) +
                     ln_h.forward(store, store.value(u) * h, &k.lh) + store.vec(b);
    k.i = sigmoid(Vector(a.segment(0, H)));
    k.f = sigmoid(Vector(a.segment(H, H)));
    k.g = tanh(Vector(a.segment(2 * H, H)));
    k.o = sigmoid(Vector(a.segment(3 * H, H)));
    Vector c_new = k.f.cwiseProduct(c) + k.i.cwiseProduct(k.g);
    k.tanh_c = tanh(ln_c.forward(store, c_new, &k.lc));
    Vector h_new = k.o.cwiseProduct(k.tanh_c);

    k.mask.resize(0);
    if (training && dropout_rate > 0.0) {
      if (!rng) throw ValidationError("ln_lstm_step: training-mode dropout needs an rng");
      k.mask.resize(H);
      const double keep_scale = 1.0 / (1.0 - dropout_rate);
      for (long j = 0; j < H; ++j) k.mask[j] = rng->uniform() < dropout_rate ? 0.0 : keep_scale;
      h_new = h_new.cwiseProduct(k.mask);
    }
    if (cache) {
      k.x = x;
      k.h = h;
      k.c = c;
    }
    return {std::move(h_new), std::move(c_new)};
  }

  struct Grads {
    Vector dx;
    Vector dh;
    Vector dc;
  };

  /// dh_out and dc_out are the upstream gradients for h' and c'.
  Grads backward(ParamStore& store, const Cache& k, const Vector& dh_out,
                 const Vector& dc_out) const {
    const long H = hidden;
    const Vector dh_raw = k.mask.size() ? Vector(dh_out.cwiseProduct(k.mask)) : dh_out;
    const Vector d_o = dh_raw.cwiseProduct(k.tanh_c);
    const Vector d_tanh = dh_raw.cwiseProduct(k.o);
    const Vector d_lc = d_tanh.cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
    const Vector dc_new = dc_out + ln_c.backward(store, k.lc, d_lc);

    Vector da(4 * H);
    da << dc_new.cwiseProduct(k.g).cwiseProduct(k.i.cwiseProduct((1.0 - k.i.array()).matrix())),
        dc_new.cwiseProduct(k.c).cwiseProduct(k.f.cwiseProduct((1.0 - k.f.array()).matrix())),
        dc_new.cwiseProduct(k.i).cwiseProduct((1.0 - k.g.array().square()).matrix()),
        d_o.cwiseProduct(k.o.cwiseProduct((1.0 - k.o.array()).matrix()));

    store.grad_vec(b) += da;
    const Vector dwx = ln_x.backward(store, k.lx, da);
    const Vector dux = ln_h.backward(store, k.lh, da);
    store.grad(w).noalias() += dwx * k.x.transpose();
    store.grad(u).noalias() += dux * k.h.transpose();
    return {store.value(w).transpose() * dwx, store.value(u).transpose() * dux,
            dc_new.cwiseProduct(k.f)};
  }
};

}  // namespace adc
