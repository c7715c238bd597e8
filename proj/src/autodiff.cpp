// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/autodiff.h"

#include <algorithm>
#include <cmath>

namespace clc::ad {

const Tensor& Var::value() const { return tape_->value(id_); }
const Tensor& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  if (!value.all_finite()) throw NumericError("leaf", "leaf: non-finite input value");
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> inputs,
                 BackwardFn fn) {
  if (!value.all_finite()) {
    throw NumericError(op, std::string(op) + ": produced a non-finite value");
  }
  bool needs_grad = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractViolation(std::string(op) + ": input from another tape");
    needs_grad = needs_grad || nodes_[in.id()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs_grad;
  node.op = op;
  if (needs_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::grad(std::size_t id) const {
  if (!backward_done_) throw ContractViolation("grad requested before backward");
  return nodes_[id].grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  Node& node = nodes_[v.id()];
  if (!node.requires_grad) return;
  if (node.grad.size() == 0 && node.value.size() != 0) {
    node.grad = g;
  } else {
    node.grad.axpy(1.0, g);
  }
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractViolation("backward: loss from another tape");
  if (backward_done_) throw ContractViolation("backward: tape already consumed");
  const Tensor& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractViolation("backward: loss must be 1x1, got " + lv.shape_string());
  }
  if (nodes_[loss.id()].requires_grad) nodes_[loss.id()].grad = Tensor::ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || node.grad.size() == 0) continue;
    node.backward(*this, node.grad);
  }
  for (Node& node : nodes_) {
    if (node.grad.size() == 0) node.grad = Tensor::zeros(node.value.rows(), node.value.cols());
  }
  backward_done_ = true;
}

namespace {

void require(bool ok, const char* op, const Var& a, const Var& b) {
  if (!ok) {
    throw ContractViolation(std::string(op) + ": incompatible shapes " +
                            a.value().shape_string() + " and " + b.value().shape_string());
  }
}

template <class F>
Tensor map(const Tensor& x, F f) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  Tape& t = *a.tape();
  return t.record("matmul", clc::matmul(a.value(), b.value()), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    if (a.requires_grad())
                      tape.accumulate(a, clc::matmul(g, clc::transpose(b.value())));
                    if (b.requires_grad())
                      tape.accumulate(b, clc::matmul(clc::transpose(a.value()), g));
                  });
}

Var transpose(Var x) {
  return x.tape()->record("transpose", clc::transpose(x.value()), {x},
                          [x](Tape& tape, const Tensor& g) {
                            tape.accumulate(x, clc::transpose(g));
                          });
}

Var add(Var x, Var y) {
  require(x.value().same_shape(y.value()), "add", x, y);
  Tensor out = x.value();
  out.axpy(1.0, y.value());
  return x.tape()->record("add", std::move(out), {x, y}, [x, y](Tape& tape, const Tensor& g) {
    tape.accumulate(x, g);
    tape.accumulate(y, g);
  });
}

Var sub(Var x, Var y) {
  require(x.value().same_shape(y.value()), "sub", x, y);
  Tensor out = x.value();
  out.axpy(-1.0, y.value());
  return x.tape()->record("sub", std::move(out), {x, y}, [x, y](Tape& tape, const Tensor& g) {
    tape.accumulate(x, g);
    tape.accumulate(y, map(g, [](double v) { return -v; }));
  });
}

Var mul(Var x, Var y) {
  require(x.value().same_shape(y.value()), "mul", x, y);
  const Tensor& xv = x.value();
  const Tensor& yv = y.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * yv[i];
  return x.tape()->record("mul", std::move(out), {x, y}, [x, y](Tape& tape, const Tensor& g) {
    const Tensor& xv = x.value();
    const Tensor& yv = y.value();
    if (x.requires_grad()) {
      Tensor gx(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * yv[i];
      tape.accumulate(x, gx);
    }
    if (y.requires_grad()) {
      Tensor gy(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) gy[i] = g[i] * xv[i];
      tape.accumulate(y, gy);
    }
  });
}

Var scale(Var x, double s) {
  return x.tape()->record("scale", map(x.value(), [s](double v) { return s * v; }), {x},
                          [x, s](Tape& tape, const Tensor& g) {
                            tape.accumulate(x, map(g, [s](double v) { return s * v; }));
                          });
}

Var affine(Var x, double a, double b) {
  return x.tape()->record("affine", map(x.value(), [a, b](double v) { return a * v + b; }), {x},
                          [x, a](Tape& tape, const Tensor& g) {
                            tape.accumulate(x, map(g, [a](double v) { return a * v; }));
                          });
}

Var add_row(Var x, Var row) {
  require(row.rows() == 1 && row.cols() == x.cols(), "add_row", x, row);
  Tensor out = x.value();
  const Tensor& r = row.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += r[j];
  return x.tape()->record("add_row", std::move(out), {x, row},
                          [x, row](Tape& tape, const Tensor& g) {
                            tape.accumulate(x, g);
                            if (row.requires_grad()) {
                              Tensor gr(1, g.cols());
                              for (std::size_t i = 0; i < g.rows(); ++i)
                                for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += g(i, j);
                              tape.accumulate(row, gr);
                            }
                          });
}

Var scale_rows(Var x, Var s) {
  require(s.cols() == 1 && s.rows() == x.rows(), "scale_rows", x, s);
  Tensor out = x.value();
  const Tensor& sv = s.value();
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= sv[i];
  return x.tape()->record(
      "scale_rows", std::move(out), {x, s}, [x, s](Tape& tape, const Tensor& g) {
        const Tensor& xv = x.value();
        const Tensor& sv = s.value();
        if (x.requires_grad()) {
          Tensor gx = g;
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) *= sv[i];
          tape.accumulate(x, gx);
        }
        if (s.requires_grad()) {
          Tensor gs(g.rows(), 1);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < g.cols(); ++j) gs[i] += g(i, j) * xv(i, j);
          tape.accumulate(s, gs);
        }
      });
}

Var relu(Var x) {
  return x.tape()->record("relu", map(x.value(), [](double v) { return v > 0.0 ? v : 0.0; }),
                          {x}, [x](Tape& tape, const Tensor& g) {
                            const Tensor& xv = x.value();
                            Tensor gx(g.rows(), g.cols());
                            for (std::size_t i = 0; i < g.size(); ++i)
                              gx[i] = xv[i] > 0.0 ? g[i] : 0.0;
                            tape.accumulate(x, gx);
                          });
}

Var sigmoid(Var x) {
  Tensor out = map(x.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Tape& t = *x.tape();
  const std::size_t self = t.size();
  return t.record("sigmoid", std::move(out), {x}, [x, self](Tape& tape, const Tensor& g) {
    const Tensor& y = tape.value(self);
    Tensor gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * y[i] * (1.0 - y[i]);
    tape.accumulate(x, gx);
  });
}

Var tanh(Var x) {
  Tape& t = *x.tape();
  const std::size_t self = t.size();
  return t.record("tanh", map(x.value(), [](double v) { return std::tanh(v); }), {x},
                  [x, self](Tape& tape, const Tensor& g) {
                    const Tensor& y = tape.value(self);
                    Tensor gx(g.rows(), g.cols());
                    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * (1.0 - y[i] * y[i]);
                    tape.accumulate(x, gx);
                  });
}

Var softmax_rows(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double m = xv(i, 0);
    for (std::size_t j = 1; j < xv.cols(); ++j) m = std::max(m, xv(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < xv.cols(); ++j) {
      out(i, j) = std::exp(xv(i, j) - m);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < xv.cols(); ++j) out(i, j) /= total;
  }
  Tape& t = *x.tape();
  const std::size_t self = t.size();
  return t.record("softmax_rows", std::move(out), {x}, [x, self](Tape& tape, const Tensor& g) {
    const Tensor& y = tape.value(self);
    Tensor gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) = y(i, j) * (g(i, j) - dot);
    }
    tape.accumulate(x, gx);
  });
}

Var log(Var x) {
  return x.tape()->record(
      "log", map(x.value(), [](double v) { return std::log(std::max(v, kLogEpsilon)); }), {x},
      [x](Tape& tape, const Tensor& g) {
        const Tensor& xv = x.value();
        Tensor gx(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i)
          gx[i] = xv[i] > kLogEpsilon ? g[i] / xv[i] : 0.0;
        tape.accumulate(x, gx);
      });
}

Var concat_cols(std::span<const Var> xs) {
  if (xs.empty()) throw ContractViolation("concat_cols: no inputs");
  const std::size_t rows = xs[0].rows();
  std::size_t cols = 0;
  for (const Var& x : xs) {
    require(x.rows() == rows, "concat_cols", xs[0], x);
    cols += x.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& x : xs) {
    const Tensor& v = x.value();
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out(i, offset + j) = v(i, j);
    offset += v.cols();
  }
  std::vector<Var> inputs(xs.begin(), xs.end());
  return xs[0].tape()->record(
      "concat_cols", std::move(out), xs, [inputs](Tape& tape, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& x : inputs) {
          if (x.requires_grad()) {
            Tensor gx(g.rows(), x.cols());
            for (std::size_t i = 0; i < g.rows(); ++i)
              for (std::size_t j = 0; j < x.cols(); ++j) gx(i, j) = g(i, off + j);
            tape.accumulate(x, gx);
          }
          off += x.cols();
        }
      });
}

Var concat_rows(std::span<const Var> xs) {
  if (xs.empty()) throw ContractViolation("concat_rows: no inputs");
  const std::size_t cols = xs[0].cols();
  std::size_t rows = 0;
  for (const Var& x : xs) {
    require(x.cols() == cols, "concat_rows", xs[0], x);
    rows += x.rows();
  }
  std::vector<double> values;
  values.reserve(rows * cols);
  for (const Var& x : xs) values.insert(values.end(), x.value().data().begin(), x.value().data().end());
  std::vector<Var> inputs(xs.begin(), xs.end());
  return xs[0].tape()->record(
      "concat_rows", Tensor(rows, cols, std::move(values)), xs,
      [inputs](Tape& tape, const Tensor& g) {
        std::size_t off = 0;
        for (const Var& x : inputs) {
          if (x.requires_grad()) tape.accumulate(x, clc::slice_rows(g, off, x.rows()));
          off += x.rows();
        }
      });
}

Var slice_rows(Var x, std::size_t start, std::size_t count) {
  return x.tape()->record("slice_rows", clc::slice_rows(x.value(), start, count), {x},
                          [x, start, count](Tape& tape, const Tensor& g) {
                            Tensor gx(x.rows(), x.cols());
                            std::copy(g.data().begin(), g.data().end(),
                                      gx.data().begin() +
                                          static_cast<std::ptrdiff_t>(start * x.cols()));
                            (void)count;
                            tape.accumulate(x, gx);
                          });
}

Var slice_cols(Var x, std::size_t start, std::size_t count) {
  const Tensor& xv = x.value();
  if (start + count > xv.cols()) {
    throw ContractViolation("slice_cols: columns [" + std::to_string(start) + ", " +
                            std::to_string(start + count) + ") outside " + xv.shape_string());
  }
  Tensor out(xv.rows(), count);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, start + j);
  return x.tape()->record("slice_cols", std::move(out), {x},
                          [x, start](Tape& tape, const Tensor& g) {
                            Tensor gx(x.rows(), x.cols());
                            for (std::size_t i = 0; i < g.rows(); ++i)
                              for (std::size_t j = 0; j < g.cols(); ++j) gx(i, start + j) = g(i, j);
                            tape.accumulate(x, gx);
                          });
}

Var row_sum(Var x) {
  const Tensor& xv = x.value();
  Tensor out(xv.rows(), 1);
  for (std::size_t i = 0; i < xv.rows(); ++i)
    for (std::size_t j = 0; j < xv.cols(); ++j) out[i] += xv(i, j);
  return x.tape()->record("row_sum", std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    Tensor gx(x.rows(), x.cols());
    for (std::size_t i = 0; i < gx.rows(); ++i)
      for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) = g[i];
    tape.accumulate(x, gx);
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape()->record("sum", Tensor(1, 1, total), {x}, [x](Tape& tape, const Tensor& g) {
    tape.accumulate(x, Tensor(x.rows(), x.cols(), g[0]));
  });
}

Var detach(Var x) { return x.tape()->constant(x.value()); }

GradCheckReport grad_check(const ScalarFunction& f, std::span<const NamedTensor> params,
                           double step,
                           const std::function<void(std::vector<Tensor>&)>& analytic_override) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(params.size());
    for (const NamedTensor& p : params) leaves.push_back(tape.leaf(p.value, true));
    Var loss = f(tape, leaves);
    tape.backward(loss);
    for (const Var& leaf : leaves) analytic.push_back(leaf.grad());
  }
  if (analytic_override) analytic_override(analytic);

  std::vector<Tensor> values;
  values.reserve(params.size());
  for (const NamedTensor& p : params) values.push_back(p.value);
  auto evaluate = [&]() {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(values.size());
    for (const Tensor& v : values) leaves.push_back(tape.leaf(v, false));
    return f(tape, leaves).value()[0];
  };

  GradCheckReport report;
  for (std::size_t p = 0; p < values.size(); ++p) {
    for (std::size_t i = 0; i < values[p].size(); ++i) {
      const double original = values[p][i];
      values[p][i] = original + step;
      const double up = evaluate();
      values[p][i] = original - step;
      const double down = evaluate();
      values[p][i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double error =
          std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (error > report.max_relative_error || report.worst_parameter.empty()) {
        report.max_relative_error = error;
        report.worst_parameter = params[p].name;
        report.worst_index = i;
        report.worst_analytic = analytic[p][i];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace clc::ad
