// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Reverse-mode automatic differentiation over small dense matrices.
//
// A Tape records every primitive executed during one forward pass. Values are
// computed eagerly; `Tape::backward` walks the record in reverse and
// accumulates gradients into every node that depends on a requires-grad leaf.
// Tapes are single-owner and discarded after backward.

#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "clc/tensor.h"

namespace clc::ad {

class Tape;

/// Handle to a node recorded on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Tensor& grad() const;
  bool requires_grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Records an input. Parameters use `requires_grad = true`.
  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  /// Records the output of a primitive. Throws NumericError if `value`
  /// contains a non-finite entry.
  Var record(const char* op, Tensor value, std::span<const Var> inputs, BackwardFn fn);
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  const char* op(std::size_t id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  /// Adds `g` into the gradient of `v` if it requires grad.
  void accumulate(Var v, const Tensor& g);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
    const char* op = "leaf";
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Primitives. Each returns a new node on the tape that owns its inputs.

Var matmul(Var a, Var b);
Var transpose(Var x);
Var add(Var x, Var y);
Var sub(Var x, Var y);
Var mul(Var x, Var y);  // elementwise
Var scale(Var x, double s);
/// a * x + b elementwise, with constants a and b.
Var affine(Var x, double a, double b);
/// Adds a 1 x n row to every row of an m x n matrix.
Var add_row(Var x, Var row);
/// Multiplies row i of an m x n matrix by s(i, 0), s being m x 1.
Var scale_rows(Var x, Var s);
Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var softmax_rows(Var x);
/// Natural log with inputs clamped below at kLogEpsilon.
Var log(Var x);
Var concat_cols(std::span<const Var> xs);
Var concat_rows(std::span<const Var> xs);
Var slice_rows(Var x, std::size_t start, std::size_t count);
Var slice_cols(Var x, std::size_t start, std::size_t count);
Var row_sum(Var x);  // m x 1
Var sum(Var x);      // 1 x 1
/// Value copy with no gradient path back to `x`.
Var detach(Var x);

inline constexpr double kLogEpsilon = 1e-12;

/// Linear layer: x * w + bias (bias broadcast over rows).
inline Var linear(Var x, Var w, Var bias) { return add_row(matmul(x, w), bias); }

// Finite-difference gradient check.

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Builds a scalar loss on `tape` from leaves bound to `params` (in order).
using ScalarFunction = std::function<Var(Tape& tape, std::span<const Var> params)>;

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Compares reverse-mode gradients of `f` against central differences with
/// the given step. The error per entry is
/// |analytic - numeric| / max(1, |numeric|); the maximum is reported.
/// `analytic_override`, when set, replaces the analytic gradients before
/// comparison (used to exercise the failure path).
GradCheckReport grad_check(
    const ScalarFunction& f, std::span<const NamedTensor> params, double step = 1e-5,
    const std::function<void(std::vector<Tensor>&)>& analytic_override = {});

}  // namespace clc::ad
