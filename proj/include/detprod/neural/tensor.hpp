#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "detprod/error.hpp"

namespace detprod::nn {

/// Thrown when operand shapes do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major array. Graph operations work on rank-2 tensors; vectors
/// are 1 x n rows.
template <class Real>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, Real fill = Real(0))
      : shape_(std::move(shape)), values_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<Real> values)
      : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != element_count(shape_)) {
      throw ShapeError("tensor: " + std::to_string(values_.size()) + " values for shape " + shape_string());
    }
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, Real fill = Real(0)) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor row(std::vector<Real> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  std::size_t rows() const { return shape_.size() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return shape_.empty() ? 0 : shape_.back(); }

  Real& operator[](std::size_t i) { return values_[i]; }
  const Real& operator[](std::size_t i) const { return values_[i]; }
  Real& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  const Real& at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<Real> values() { return values_; }
  std::span<const Real> values() const { return values_; }
  std::span<Real> row_span(std::size_t r) { return std::span<Real>(values_).subspan(r * cols(), cols()); }
  std::span<const Real> row_span(std::size_t r) const {
    return std::span<const Real>(values_).subspan(r * cols(), cols());
  }

  void fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  std::string shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) s += (i ? "x" : "") + std::to_string(shape_[i]);
    return s + "]";
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> shape_;
  std::vector<Real> values_;
};

/// A trainable tensor with its accumulated gradient.
template <class Real>
struct Parameter {
  Parameter() = default;
  Parameter(std::string n, Tensor<Real> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  std::string name;
  Tensor<Real> value;
  Tensor<Real> grad;

  void zero_grad() { grad.fill(Real(0)); }
};

}  // namespace detprod::nn
