#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "adc/model/dims.hpp"
#include "adc/nn/gru.hpp"
#include "adc/nn/ops.hpp"

namespace adc {

/// delta_t rises linearly from `start` at epoch 0 to `end` at the final epoch.
struct DeltaSchedule {
  double start = 0.01;
  double end = 1.0;
  int total_epochs = 100;

  void validate() const {
    if (!(start <= end)) throw ValidationError("delta schedule: start must be <= end");
    if (total_epochs < 1) throw ValidationError("delta schedule: total_epochs must be >= 1");
  }

  double at(int epoch) const {
    if (total_epochs <= 1) return end;
    const double d = start + (end - start) * static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    return std::clamp(d, start, end);
  }
};

/// A_ed = A_gen - delta_t * A_orig.
inline double advantage_ed(double a_gen, double a_orig, const DeltaSchedule& schedule, int epoch) {
  return a_gen - schedule.at(epoch) * a_orig;
}

struct ProbeRecord {
  Vector recon;    // normalized reconstruction
  Vector feature;  // normalized projected feature
  Vector absdiff;
  double cosine = 0.0;

  /// CSV: header `dim,recon,feature,absdiff`, one row per dimension, then `cosine,<value>`.
  void write_csv(std::ostream& out) const {
    const auto old_precision = out.precision(17);
    out << "dim,recon,feature,absdiff\n";
    for (long d = 0; d < recon.size(); ++d)
      out << d << ',' << recon[d] << ',' << feature[d] << ',' << absdiff[d] << '\n';
    out << "cosine," << cosine << '\n';
    out.precision(old_precision);
  }
};

/// Sentence-to-feature critic D(S). The encoder GRU starts from the projected
/// image feature f and reads the sentence; psi1/psi2 (linear + ReLU) seed the
/// decoder input and hidden state; the decoder runs |S| steps feeding back
/// its own projected output; the mean output is compared to f.
class EncDecCritic {
 public:
  EncDecCritic() = default;

  EncDecCritic(const ModelDims& dims, Rng& rng) : dims_(dims) {
    dims.validate();
    const long H = dims.hidden;
    proj_ = Linear::create(store_, "proj", dims.feature_dim, H, rng);
    proj_norm_ = LayerNorm::create(store_, "proj_norm", H);
    embed_ = Embedding::create(store_, "embed", dims.vocab_size, H, rng);
    enc_ = GruCell::create(store_, "enc", H, H, rng);
    dec_ = GruCell::create(store_, "dec", H, H, rng);
    psi1_ = Linear::create(store_, "psi1", H, H, rng);
    psi2_ = Linear::create(store_, "psi2", H, H, rng);
    out_ = Linear::create(store_, "out", H, H, rng);
  }

  const ModelDims& dims() const { return dims_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  /// f = relu(norm(W features + b)).
  Vector project(const Vector& features) const {
    require_length("encdec features", features.size(), dims_.feature_dim);
    return relu(proj_norm_.forward(store_, proj_.forward(store_, features), nullptr));
  }

  /// Mean decoder output over |S| steps.
  Vector reconstruct(const Vector& features, const Tokens& sentence) const {
    return forward(features, sentence, nullptr);
  }

  /// Mean squared error between reconstruct() and f, with f held constant as
  /// the regression target. Accumulates gradients.
  double recon_loss(const Vector& features, const Tokens& sentence) {
    const Vector target = project(features);
    return recon_loss_to_target(features, sentence, target);
  }

  double recon_loss_to_target(const Vector& features, const Tokens& sentence, const Vector& target) {
    require_length("encdec target", target.size(), dims_.hidden);
    Trace tr;
    const Vector recon = forward(features, sentence, &tr);
    const Vector diff = recon - target;
    const double H = static_cast<double>(dims_.hidden);
    const double loss = diff.squaredNorm() / H;
    backward(features, sentence, tr, (2.0 / H) * diff);
    return loss;
  }

  /// Cosine between reconstruction and f; 0 for a vanishing reconstruction.
  double cosine_accuracy(const Vector& features, const Tokens& sentence) const {
    return probe(features, sentence).cosine;
  }

  ProbeRecord probe(const Vector& features, const Tokens& sentence) const {
    if (features.norm() == 0.0) throw ValidationError("cosine_accuracy: zero feature vector");
    const Vector f = project(features);
    const double fn = f.norm();
    if (fn == 0.0) throw ValidationError("cosine_accuracy: projected feature vector is zero");
    const Vector recon = reconstruct(features, sentence);
    const double rn = recon.norm();
    ProbeRecord p;
    p.feature = f / fn;
    if (rn < 1e-12) {
      p.recon = Vector::Zero(recon.size());
      p.cosine = 0.0;
    } else {
      p.recon = recon / rn;
      p.cosine = std::clamp(p.recon.dot(p.feature), -1.0, 1.0);
    }
    p.absdiff = (p.recon - p.feature).cwiseAbs();
    return p;
  }

  /// Smallest |pre-activation| over every ReLU input; finite-difference
  /// checks are only meaningful away from the kink.
  double relu_margin(const Vector& features, const Tokens& sentence) const {
    Trace k;
    forward(features, sentence, &k);
    return std::min({k.proj_normed.cwiseAbs().minCoeff(), k.psi1_pre.cwiseAbs().minCoeff(),
                     k.psi2_pre.cwiseAbs().minCoeff()});
  }

 private:
  struct Trace {
    Vector proj_pre, proj_normed;
    LayerNormCache proj_ln;
    std::vector<GruCell::Cache> enc;
    Vector h_enc;
    Vector psi1_pre, psi2_pre;
    std::vector<GruCell::Cache> dec;
    std::vector<Vector> h_dec;
  };

  Vector forward(const Vector& features, const Tokens& sentence, Trace* tr) const {
    if (sentence.empty()) throw ValidationError("encdec critic: empty sentence");
    require_length("encdec features", features.size(), dims_.feature_dim);
    for (TokenId a : sentence) embed_.check(a);
    const std::size_t T = sentence.size();
    Trace local;
    Trace& k = tr ? *tr : local;

    k.proj_pre = proj_.forward(store_, features);
    k.proj_normed = proj_norm_.forward(store_, k.proj_pre, &k.proj_ln);
    Vector h = relu(k.proj_normed);
    k.enc.assign(T, {});
    for (std::size_t t = 0; t < T; ++t) h = enc_.forward(store_, embed_.forward(store_, sentence[t]), h, &k.enc[t]);
    k.h_enc = h;  // for a GRU the output o_T equals h_T

    k.psi1_pre = psi1_.forward(store_, k.h_enc);
    k.psi2_pre = psi2_.forward(store_, k.h_enc);
    Vector input = relu(k.psi1_pre);
    Vector hd = relu(k.psi2_pre);
    k.dec.assign(T, {});
    k.h_dec.assign(T, {});
    Vector sum = Vector::Zero(dims_.hidden);
    for (std::size_t t = 0; t < T; ++t) {
      hd = dec_.forward(store_, input, hd, &k.dec[t]);
      k.h_dec[t] = hd;
      input = out_.forward(store_, hd);
      sum += input;
    }
    return sum / static_cast<double>(T);
  }

  void backward(const Vector& features, const Tokens& sentence, const Trace& k, const Vector& drecon) {
    const std::size_t T = sentence.size();
    const long H = dims_.hidden;
    const Vector dout_each = drecon / static_cast<double>(T);
    Vector dinput_next = Vector::Zero(H);  // gradient into o_t via the next step's input
    Vector dhd = Vector::Zero(H);
    for (std::size_t t = T; t-- > 0;) {
      const Vector d_o = dout_each + dinput_next;
      dhd += out_.backward(store_, k.h_dec[t], d_o);
      auto g = dec_.backward(store_, k.dec[t], dhd);
      dinput_next = std::move(g.dx);
      dhd = std::move(g.dh);
    }
    const auto relu_mask = [](const Vector& pre) { return (pre.array() > 0.0).cast<double>().matrix(); };
    Vector dh_enc = psi1_.backward(store_, k.h_enc, dinput_next.cwiseProduct(relu_mask(k.psi1_pre)));
    dh_enc += psi2_.backward(store_, k.h_enc, dhd.cwiseProduct(relu_mask(k.psi2_pre)));
    for (std::size_t t = T; t-- > 0;) {
      auto g = enc_.backward(store_, k.enc[t], dh_enc);
      embed_.backward(store_, sentence[t], g.dx);
      dh_enc = std::move(g.dh);
    }
    const Vector dnormed = dh_enc.cwiseProduct(relu_mask(k.proj_normed));
    proj_.backward(store_, features, proj_norm_.backward(store_, k.proj_ln, dnormed));
  }

  ModelDims dims_;
  ParamStore store_;
  Linear proj_;
  LayerNorm proj_norm_;
  Embedding embed_;
  GruCell enc_;
  GruCell dec_;
  Linear psi1_;
  Linear psi2_;
  Linear out_;
};

}  // namespace adc
