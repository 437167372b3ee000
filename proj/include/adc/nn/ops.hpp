#pragma once

#include <cmath>
#include <string>

#include "adc/error.hpp"
#include "adc/nn/param_store.hpp"
#include "adc/nn/types.hpp"

namespace adc {

inline void require_length(const char* what, long got, long want) {
  if (got != want)
    throw ShapeError(std::string(what) + ": expected length " + std::to_string(want) + ", got " +
                     std::to_string(got));
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

inline Vector tanh(const Vector& x) {
  return x.unaryExpr([](double v) { return std::tanh(v); });
}

inline Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

// ---------------------------------------------------------------------------
// Dense layer y = W x + b

inline Vector linear_forward(const Matrix& w, const Vector& b, const Vector& x) {
  if (x.size() != w.cols() || b.size() != w.rows())
    throw ShapeError("linear: W " + shape_string(w.rows(), w.cols()) + ", b " +
                     shape_string(b.size(), 1) + ", x " + shape_string(x.size(), 1));
  return w * x + b;
}

/// Accumulates dW, db and returns dx.
inline Vector linear_backward(const Matrix& w, const Vector& x, const Vector& dy, Matrix& dw,
                              Eigen::Ref<Vector> db) {
  dw.noalias() += dy * x.transpose();
  db += dy;
  return w.transpose() * dy;
}

struct Linear {
  ParamId weight;
  ParamId bias;
  long in = 0;
  long out = 0;

  static Linear create(ParamStore& store, const std::string& name, long in, long out, Rng& rng) {
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = store.add_uniform(name + ".weight", out, in, in, rng);
    l.bias = store.add_uniform(name + ".bias", out, 1, in, rng);
    return l;
  }

  Vector forward(const ParamStore& store, const Vector& x) const {
    return linear_forward(store.value(weight), store.vec(bias), x);
  }

  Vector backward(ParamStore& store, const Vector& x, const Vector& dy) const {
    return linear_backward(store.value(weight), x, dy, store.grad(weight), store.grad_vec(bias));
  }
};

// ---------------------------------------------------------------------------
// Softmax

inline Vector softmax(const Vector& logits) {
  if (logits.size() == 0) throw ShapeError("softmax: empty input");
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

/// log softmax, shifted by the max for stability.
inline Vector log_softmax(const Vector& logits) {
  if (logits.size() == 0) throw ShapeError("log_softmax: empty input");
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

// ---------------------------------------------------------------------------
// Layer normalization y = gain * (x - mean) / sqrt(var + eps) + bias

struct LayerNormCache {
  Vector xhat;
  double inv_std = 0.0;
};

inline Vector layer_norm(const Vector& x, const Vector& gain, const Vector& bias, double eps = 1e-5,
                         LayerNormCache* cache = nullptr) {
  if (x.size() != gain.size() || x.size() != bias.size())
    throw ShapeError("layer_norm: x " + shape_string(x.size(), 1) + ", gain " +
                     shape_string(gain.size(), 1) + ", bias " + shape_string(bias.size(), 1));
  if (x.size() == 0) throw ShapeError("layer_norm: empty input");
  if (!(eps > 0.0)) throw ValidationError("layer_norm: eps must be positive");
  const double n = static_cast<double>(x.size());
  const double mean = x.sum() / n;
  Vector centered = x.array() - mean;
  const double var = centered.squaredNorm() / n;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  Vector xhat = centered * inv_std;
  Vector y = gain.cwiseProduct(xhat) + bias;
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

/// Accumulates dgain, dbias and returns dx.
inline Vector layer_norm_backward(const LayerNormCache& cache, const Vector& gain, const Vector& dy,
                                  Eigen::Ref<Vector> dgain, Eigen::Ref<Vector> dbias) {
  dgain += dy.cwiseProduct(cache.xhat);
  dbias += dy;
  const Vector dxhat = dy.cwiseProduct(gain);
  const double n = static_cast<double>(dy.size());
  const double mean_d = dxhat.sum() / n;
  const double mean_dx = dxhat.dot(cache.xhat) / n;
  return cache.inv_std * (dxhat.array() - mean_d - cache.xhat.array() * mean_dx).matrix();
}

struct LayerNorm {
  ParamId gain;
  ParamId bias;
  long size = 0;
  double eps = 1e-5;

  static LayerNorm create(ParamStore& store, const std::string& name, long size) {
    LayerNorm ln;
    ln.size = size;
    ln.gain = store.add_constant(name + ".gain", size, 1, 1.0);
    ln.bias = store.add_constant(name + ".bias", size, 1, 0.0);
    return ln;
  }

  Vector forward(const ParamStore& store, const Vector& x, LayerNormCache* cache) const {
    return layer_norm(x, store.vec(gain), store.vec(bias), eps, cache);
  }

  Vector backward(ParamStore& store, const LayerNormCache& cache, const Vector& dy) const {
    return layer_norm_backward(cache, store.vec(gain), dy, store.grad_vec(gain),
                               store.grad_vec(bias));
  }
};

// ---------------------------------------------------------------------------
// Token embedding table (vocab x dim)

struct Embedding {
  ParamId table;
  long vocab = 0;
  long dim = 0;

  static Embedding create(ParamStore& store, const std::string& name, long vocab, long dim,
                          Rng& rng) {
    Embedding e;
    e.vocab = vocab;
    e.dim = dim;
    e.table = store.add_uniform(name + ".table", vocab, dim, dim, rng);
    return e;
  }

  void check(TokenId token) const {
    if (token < 0 || token >= vocab)
      throw ValidationError("token id " + std::to_string(token) + " outside vocabulary of size " +
                            std::to_string(vocab));
  }

  Vector forward(const ParamStore& store, TokenId token) const {
    check(token);
    return store.value(table).row(token).transpose();
  }

  void backward(ParamStore& store, TokenId token, const Vector& dy) const {
    store.grad(table).row(token) += dy.transpose();
  }
};

}  // namespace adc
