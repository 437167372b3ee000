#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "adc/error.hpp"
#include "adc/nn/rng.hpp"
#include "adc/nn/types.hpp"

namespace adc {

/// Index of a parameter inside its ParamStore.
struct ParamId {
  std::size_t index = 0;
};

struct ParamMatrix {
  std::string name;
  Matrix value;
  Matrix grad;

  long rows() const { return value.rows(); }
  long cols() const { return value.cols(); }
};

/// Named trainable tensors with gradient accumulators and Adam moments.
/// Vectors are stored as (n x 1) matrices.
class ParamStore {
 public:
  ParamId add(const std::string& name, long rows, long cols) {
    if (index_.count(name)) throw ValidationError("duplicate parameter name '" + name + "'");
    if (rows < 0 || cols < 0) throw ShapeError("negative shape for '" + name + "'");
    index_.emplace(name, params_.size());
    params_.push_back({name, Matrix::Zero(rows, cols), Matrix::Zero(rows, cols)});
    adam_m_.push_back(Matrix::Zero(rows, cols));
    adam_v_.push_back(Matrix::Zero(rows, cols));
    return {params_.size() - 1};
  }

  /// uniform(-a, a) with a = 1/sqrt(fan_in).
  ParamId add_uniform(const std::string& name, long rows, long cols, long fan_in, Rng& rng) {
    ParamId id = add(name, rows, cols);
    const double a = 1.0 / std::sqrt(static_cast<double>(std::max(1L, fan_in)));
    Matrix& v = params_[id.index].value;
    for (long i = 0; i < v.size(); ++i) v.data()[i] = rng.uniform(-a, a);
    return id;
  }

  ParamId add_constant(const std::string& name, long rows, long cols, double value) {
    ParamId id = add(name, rows, cols);
    params_[id.index].value.setConstant(value);
    return id;
  }

  std::size_t size() const { return params_.size(); }

  ParamMatrix& at(ParamId id) { return params_.at(id.index); }
  const ParamMatrix& at(ParamId id) const { return params_.at(id.index); }
  ParamMatrix& at(std::size_t i) { return params_.at(i); }
  const ParamMatrix& at(std::size_t i) const { return params_.at(i); }

  Matrix& value(ParamId id) { return params_[id.index].value; }
  const Matrix& value(ParamId id) const { return params_[id.index].value; }
  Matrix& grad(ParamId id) { return params_[id.index].grad; }

  /// Column view of an (n x 1) parameter.
  Eigen::Map<const Vector> vec(ParamId id) const {
    const Matrix& m = params_[id.index].value;
    return {m.data(), m.size()};
  }
  Eigen::Map<Vector> grad_vec(ParamId id) {
    Matrix& m = params_[id.index].grad;
    return {m.data(), m.size()};
  }

  const ParamMatrix* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }
  ParamMatrix* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &params_[it->second];
  }
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown parameter '" + name + "'");
    return it->second;
  }

  Matrix& adam_m(std::size_t i) { return adam_m_.at(i); }
  Matrix& adam_v(std::size_t i) { return adam_v_.at(i); }
  const Matrix& adam_m(std::size_t i) const { return adam_m_.at(i); }
  const Matrix& adam_v(std::size_t i) const { return adam_v_.at(i); }

  long step_count() const { return step_count_; }
  void set_step_count(long n) { step_count_ = n; }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  void set_zero() {
    for (auto& p : params_) p.value.setZero();
  }

  std::size_t num_scalars() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  std::vector<ParamMatrix>& params() { return params_; }
  const std::vector<ParamMatrix>& params() const { return params_; }

 private:
  std::vector<ParamMatrix> params_;
  std::vector<Matrix> adam_m_;
  std::vector<Matrix> adam_v_;
  std::unordered_map<std::string, std::size_t> index_;
  long step_count_ = 0;
};

}  // namespace adc
