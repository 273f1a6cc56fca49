// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mimicbench/errors.hpp"

namespace mimicbench {

using Index = std::int64_t;
using Shape = std::vector<Index>;

template <typename Scalar>
using MatrixRM = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

inline Index shape_product(const Shape& s) {
  Index n = 1;
  for (Index d : s) {
    if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}

/// Dense row-major tensor. Image batches are ordered (batch, channel,
/// height, width). Value semantics throughout: ops return fresh tensors and
/// never alias their inputs.
template <typename Scalar>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_product(shape_)), Scalar(0)) {}

  Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_product(shape_) != static_cast<Index>(data_.size()))
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_str(shape_));
  }

  Tensor(Shape shape, std::initializer_list<Scalar> values)
      : Tensor(std::move(shape), std::vector<Scalar>(values)) {}

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, Scalar value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Index dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  Index size() const { return static_cast<Index>(data_.size()); }
  bool empty() const { return data_.empty(); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  std::span<Scalar> values() { return {data_.data(), data_.size()}; }
  std::span<const Scalar> values() const { return {data_.data(), data_.size()}; }

  Scalar& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }
  Scalar operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }

  Scalar& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }
  Scalar operator()(Index i, Index j) const { return data_[static_cast<std::size_t>(i * shape_[1] + j)]; }

  Scalar& operator()(Index n, Index c, Index h, Index w) {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }
  Scalar operator()(Index n, Index c, Index h, Index w) const {
    return data_[static_cast<std::size_t>(((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w)];
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Same data, new shape; element count must match.
  Tensor reshaped(Shape shape) const {
    if (shape_product(shape) != size())
      throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Tensor(std::move(shape), data_);
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), Scalar(0)); }

  bool all_finite() const {
    for (Scalar v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  /// Eigen map over the flat storage viewed as a rows x cols row-major
  /// matrix. rows * cols must equal size().
  Eigen::Map<MatrixRM<Scalar>> matrix(Index rows, Index cols) {
    check_view(rows, cols);
    return {data_.data(), rows, cols};
  }
  Eigen::Map<const MatrixRM<Scalar>> matrix(Index rows, Index cols) const {
    check_view(rows, cols);
    return {data_.data(), rows, cols};
  }

  /// 2-D tensors map to their natural matrix view.
  Eigen::Map<MatrixRM<Scalar>> matrix() { return matrix(shape_.at(0), shape_.at(1)); }
  Eigen::Map<const MatrixRM<Scalar>> matrix() const { return matrix(shape_.at(0), shape_.at(1)); }

  Eigen::Map<VectorX<Scalar>> vector() { return {data_.data(), size()}; }
  Eigen::Map<const VectorX<Scalar>> vector() const { return {data_.data(), size()}; }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(shape_);
    for (Index i = 0; i < size(); ++i) out[i] = static_cast<Other>(data_[static_cast<std::size_t>(i)]);
    return out;
  }

 private:
  void check_view(Index rows, Index cols) const {
    if (rows * cols != size())
      throw ShapeError("matrix view " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " does not cover tensor " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<Scalar> data_;
};

enum class ParamRole { kWeight, kBias };

/// A learnable tensor and its gradient accumulator; grad always mirrors the
/// value shape.
template <typename Scalar>
struct Parameter {
  Parameter() = default;
  Parameter(std::string name_, Tensor<Scalar> value_, ParamRole role_)
      : name(std::move(name_)), value(std::move(value_)), grad(value.shape()), role(role_) {}

  void zero_grad() { grad.set_zero(); }

  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  ParamRole role = ParamRole::kWeight;
};

}  // namespace mimicbench
