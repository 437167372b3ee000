#pragma once

#include <string>

#include "adc/nn/ops.hpp"

namespace adc {

/// Standard GRU cell.
///   z  = sigmoid(W_z x + U_z h + b_z)
///   r  = sigmoid(W_r x + U_r h + b_r)
///   n  = tanh(W_n x + r * (U_n h) + b_n)
///   h' = (1 - z) * n + z * h
/// Gate blocks are stacked [z; r; n] in W (3H x I), U (3H x H) and b (3H).
struct GruCell {
  ParamId w;
  ParamId u;
  ParamId b;
  long input = 0;
  long hidden = 0;

  struct Cache {
    Vector x, h, z, r, n, un;
  };

  static GruCell create(ParamStore& store, const std::string& name, long input, long hidden,
                        Rng& rng) {
    GruCell c;
    c.input = input;
    c.hidden = hidden;
    c.w = store.add_uniform(name + ".w", 3 * hidden, input, input, rng);
    c.u = store.add_uniform(name + ".u", 3 * hidden, hidden, hidden, rng);
    c.b = store.add_uniform(name + ".b", 3 * hidden, 1, hidden, rng);
    return c;
  }

  Vector forward(const ParamStore& store, const Vector& x, const Vector& h,
                 Cache* cache = nullptr) const {
    require_length("gru_step input", x.size(), input);
    require_length("gru_step hidden", h.size(), hidden);
    const long H = hidden;
    const Vector wx = store.value(w) * x + store.vec(b);
    const Vector uh = store.value(u) * h;
    Vector z = sigmoid(Vector(wx.segment(0, H) + uh.segment(0, H)));
    Vector r = sigmoid(Vector(wx.segment(H, H) + uh.segment(H, H)));
    Vector un = uh.segment(2 * H, H);
    Vector n = tanh(Vector(wx.segment(2 * H, H) + r.cwiseProduct(un)));
    Vector out = (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
    if (cache) *cache = {x, h, std::move(z), std::move(r), std::move(n), std::move(un)};
    return out;
  }

  struct Grads {
    Vector dx;
    Vector dh;
  };

  /// Accumulates parameter gradients; returns gradients w.r.t. x and h.
  Grads backward(ParamStore& store, const Cache& c, const Vector& dout) const {
    const long H = hidden;
    const Vector dn = dout.cwiseProduct((1.0 - c.z.array()).matrix());
    const Vector dz = dout.cwiseProduct(c.h - c.n);
    Vector dh = dout.cwiseProduct(c.z);

    const Vector dan = dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
    const Vector dr = dan.cwiseProduct(c.un);
    const Vector daz = dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
    const Vector dar = dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));

    Vector da(3 * H);
    da << daz, dar, dan;
    Vector du(3 * H);
    du << daz, dar, dan.cwiseProduct(c.r);

    store.grad(w).noalias() += da * c.x.transpose();
    store.grad_vec(b) += da;
    store.grad(u).noalias() += du * c.h.transpose();
    Vector dx = store.value(w).transpose() * da;
    dh.noalias() += store.value(u).transpose() * du;
    return {std::move(dx), std::move(dh)};
  }
};

}  // namespace adc
