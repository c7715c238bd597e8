// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace clc {

/// Raised when a caller breaks a documented precondition (shape mismatch,
/// out-of-range argument, empty batch).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a primitive produces a NaN or infinity. `op()` names the
/// primitive that produced it.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string op, const std::string& what)
      : std::runtime_error(what), op_(std::move(op)) {}
  const std::string& op() const { return op_; }

 private:
  std::string op_;
};

/// Dense row-major matrix of doubles. Vectors are stored as m x 1 columns or
/// 1 x n rows. The shape is fixed at construction.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor zeros(std::size_t rows, std::size_t cols) { return {rows, cols, 0.0}; }
  static Tensor ones(std::size_t rows, std::size_t cols) { return {rows, cols, 1.0}; }
  static Tensor identity(std::size_t n);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool same_shape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> data() { return values_; }
  std::span<const double> data() const { return values_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values_).subspan(r * cols_, cols_);
  }

  bool all_finite() const;
  std::string shape_string() const;

  /// In-place `this += scale * other`; shapes must agree.
  void axpy(double scale, const Tensor& other);

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Returns the rows [start, start + count) as a new tensor.
Tensor slice_rows(const Tensor& x, std::size_t start, std::size_t count);

/// Untracked product.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace clc
