// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/branches.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <string>

namespace clc {

using ad::Var;

namespace {

void check_gru(Var x, const GruWeights<Var>& w) {
  const std::size_t h = w.hidden.rows();
  if (x.rows() == 0) throw ContractViolation("gru_sequence: empty sequence");
  if (x.cols() != w.input.rows()) {
    throw ContractViolation("gru_sequence: input dimension " + std::to_string(x.cols()) +
                            " does not match head input " + std::to_string(w.input.rows()));
  }
  if (w.input.cols() != 3 * h || w.hidden.cols() != 3 * h || w.input_bias.cols() != 3 * h ||
      w.hidden_bias.cols() != 3 * h || w.input_bias.rows() != 1 || w.hidden_bias.rows() != 1) {
    throw ContractViolation("gru_sequence: gate blocks must be 3H = " + std::to_string(3 * h) +
                            " wide");
  }
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// Per-step activations kept for the backward pass.
struct GruTrace {
  Tensor update;  // T x H
  Tensor reset;   // T x H
  Tensor cand;    // T x H
  Tensor rec_cand;  // T x H, hidden-side candidate pre-activation before reset
  Tensor prev;    // T x H, state entering each step
};

}  // namespace

Var gru_sequence(Var x, const GruWeights<Var>& w, bool reverse) {
  check_gru(x, w);
  const std::size_t steps = x.rows();
  const std::size_t h = w.hidden.rows();
  const Tensor& wh = w.hidden.value();
  const Tensor& bh = w.hidden_bias.value();

  Tensor projected = matmul(x.value(), w.input.value());
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t c = 0; c < 3 * h; ++c) projected(t, c) += w.input_bias.value()(0, c);

  auto trace = std::make_shared<GruTrace>(GruTrace{Tensor(steps, h), Tensor(steps, h),
                                                   Tensor(steps, h), Tensor(steps, h),
                                                   Tensor(steps, h)});
  Tensor out(steps, h);
  std::vector<double> state(h, 0.0), rec(3 * h);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    for (std::size_t c = 0; c < 3 * h; ++c) rec[c] = bh(0, c);
    for (std::size_t k = 0; k < h; ++k) {
      const double s = state[k];
      if (s == 0.0) continue;
      for (std::size_t c = 0; c < 3 * h; ++c) rec[c] += s * wh(k, c);
    }
    for (std::size_t j = 0; j < h; ++j) {
      const double z = sigmoid(projected(t, j) + rec[j]);
      const double r = sigmoid(projected(t, h + j) + rec[h + j]);
      const double c = std::tanh(projected(t, 2 * h + j) + r * rec[2 * h + j]);
      trace->update(t, j) = z;
      trace->reset(t, j) = r;
      trace->cand(t, j) = c;
      trace->rec_cand(t, j) = rec[2 * h + j];
      trace->prev(t, j) = state[j];
      out(t, j) = c + z * (state[j] - c);
    }
    for (std::size_t j = 0; j < h; ++j) state[j] = out(t, j);
  }

  const std::array<Var, 5> inputs{x, w.input, w.hidden, w.input_bias, w.hidden_bias};
  return x.tape()->record(
      "gru", std::move(out), inputs,
      [x, w, reverse, trace, steps, h](ad::Tape& tape, const Tensor& g) {
        const Tensor& wh = w.hidden.value();
        Tensor d_proj(steps, 3 * h);
        Tensor d_wh(h, 3 * h);
        Tensor d_bh(1, 3 * h);
        std::vector<double> carry(h, 0.0), d_rec(3 * h), d_prev(h);
        for (std::size_t n = 0; n < steps; ++n) {
          const std::size_t t = reverse ? n : steps - 1 - n;
          for (std::size_t j = 0; j < h; ++j) {
            const double dh = g(t, j) + carry[j];
            const double z = trace->update(t, j);
            const double r = trace->reset(t, j);
            const double c = trace->cand(t, j);
            const double prev = trace->prev(t, j);
            const double d_cand_pre = dh * (1.0 - z) * (1.0 - c * c);
            const double d_update_pre = dh * (prev - c) * z * (1.0 - z);
            const double d_reset_pre = d_cand_pre * trace->rec_cand(t, j) * r * (1.0 - r);
            d_proj(t, j) = d_update_pre;
            d_proj(t, h + j) = d_reset_pre;
            d_proj(t, 2 * h + j) = d_cand_pre;
            d_rec[j] = d_update_pre;
            d_rec[h + j] = d_reset_pre;
            d_rec[2 * h + j] = d_cand_pre * r;
            d_prev[j] = dh * z;
          }
          for (std::size_t c = 0; c < 3 * h; ++c) d_bh(0, c) += d_rec[c];
          for (std::size_t k = 0; k < h; ++k) {
            const double p = trace->prev(t, k);
            double back = 0.0;
            for (std::size_t c = 0; c < 3 * h; ++c) {
              if (p != 0.0) d_wh(k, c) += p * d_rec[c];
              back += d_rec[c] * wh(k, c);
            }
            carry[k] = d_prev[k] + back;
          }
        }
        if (x.requires_grad()) tape.accumulate(x, matmul(d_proj, transpose(w.input.value())));
        if (w.input.requires_grad()) tape.accumulate(w.input, matmul(transpose(x.value()), d_proj));
        if (w.input_bias.requires_grad()) {
          Tensor d_bi(1, 3 * h);
          for (std::size_t t = 0; t < steps; ++t)
            for (std::size_t c = 0; c < 3 * h; ++c) d_bi(0, c) += d_proj(t, c);
          tape.accumulate(w.input_bias, d_bi);
        }
        if (w.hidden.requires_grad()) tape.accumulate(w.hidden, d_wh);
        if (w.hidden_bias.requires_grad()) tape.accumulate(w.hidden_bias, d_bh);
      });
}

Var gru_sequence_unfused(Var x, const GruWeights<Var>& w, bool reverse) {
  check_gru(x, w);
  const std::size_t steps = x.rows();
  const std::size_t h = w.hidden.rows();
  Var projected = ad::linear(x, w.input, w.input_bias);
  Var in_update = ad::slice_cols(projected, 0, h);
  Var in_reset = ad::slice_cols(projected, h, h);
  Var in_cand = ad::slice_cols(projected, 2 * h, h);

  Var state = x.tape()->constant(Tensor::zeros(1, h));
  std::vector<Var> states(steps);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::size_t t = reverse ? steps - 1 - n : n;
    Var rec = ad::linear(state, w.hidden, w.hidden_bias);
    Var update = ad::sigmoid(ad::add(ad::slice_rows(in_update, t, 1), ad::slice_cols(rec, 0, h)));
    Var reset = ad::sigmoid(ad::add(ad::slice_rows(in_reset, t, 1), ad::slice_cols(rec, h, h)));
    Var cand = ad::tanh(
        ad::add(ad::slice_rows(in_cand, t, 1), ad::mul(reset, ad::slice_cols(rec, 2 * h, h))));
    // h' = (1 - z) * n + z * h = n + z * (h - n)
    state = ad::add(cand, ad::mul(update, ad::sub(state, cand)));
    states[t] = state;
  }
  return ad::concat_rows(states);
}

Var head_forward(Var features, const HeadWeights<Var>& head) {
  const std::array<Var, 2> both{gru_sequence(features, head.forward, false),
                                gru_sequence(features, head.backward, true)};
  Var logits = ad::linear(ad::concat_cols(both), head.classifier.weight, head.classifier.bias);
  return ad::softmax_rows(logits);
}

Tensor one_hot(std::span<const std::uint8_t> labels) {
  Tensor g(labels.size(), 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 1) throw ContractViolation("one_hot: labels must be 0 or 1");
    g(i, labels[i] == 1 ? kHighlightClass : 1 - kHighlightClass) = 1.0;
  }
  return g;
}

std::vector<double> per_sample_ce(const Tensor& probs, std::span<const std::uint8_t> labels) {
  if (probs.rows() != labels.size() || probs.cols() != 2) {
    throw ContractViolation("per_sample_ce: probabilities " + probs.shape_string() + " vs " +
                            std::to_string(labels.size()) + " labels");
  }
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t c = labels[i] == 1 ? kHighlightClass : 1 - kHighlightClass;
    out[i] = -std::log(std::max(probs(i, c), ad::kLogEpsilon));
  }
  return out;
}

namespace {

void check_probs(const Var& probs, std::size_t n, const char* op) {
  if (n == 0) throw ContractViolation(std::string(op) + ": empty batch");
  if (probs.rows() != n || probs.cols() != 2) {
    throw ContractViolation(std::string(op) + ": probabilities " + probs.value().shape_string() +
                            " vs " + std::to_string(n) + " samples");
  }
}

Tensor selection_mask(std::size_t rows, std::span<const std::size_t> selection) {
  Tensor mask(rows, 1);
  for (std::size_t i : selection) {
    if (i >= rows) throw ContractViolation("selection index outside the batch");
    mask[i] = 1.0;
  }
  return mask;
}

Var reduce(Var total, Reduction reduction, std::size_t count) {
  if (reduction == Reduction::kMean) return ad::scale(total, 1.0 / static_cast<double>(count));
  return total;
}

}  // namespace

Var uni_modal_loss(Var probs, std::span<const std::uint8_t> labels, Reduction reduction) {
  check_probs(probs, labels.size(), "uni_modal_loss");
  Var targets = probs.tape()->constant(one_hot(labels));
  return reduce(ad::scale(ad::sum(ad::mul(targets, ad::log(probs))), -1.0), reduction,
                labels.size());
}

Var mm_ce_loss(Var probs, std::span<const std::uint8_t> labels,
               std::span<const std::size_t> selection, Reduction reduction) {
  check_probs(probs, labels.size(), "mm_ce_loss");
  if (selection.empty()) throw NoCleanSamples();
  const Tensor mask = selection_mask(labels.size(), selection);
  Tensor targets = one_hot(labels);
  for (std::size_t i = 0; i < targets.rows(); ++i)
    for (std::size_t c = 0; c < 2; ++c) targets(i, c) *= mask[i];
  Var t = probs.tape()->constant(std::move(targets));
  return reduce(ad::scale(ad::sum(ad::mul(t, ad::log(probs))), -1.0), reduction,
                selection.size());
}

Var consistency_loss(Var y_mm, Var y_v, Var y_a, std::span<const std::size_t> selection,
                     Reduction reduction, bool detach_targets) {
  if (!y_mm.value().same_shape(y_v.value()) || !y_mm.value().same_shape(y_a.value())) {
    throw ContractViolation("consistency_loss: branch outputs differ in shape");
  }
  if (selection.empty()) throw NoCleanSamples();
  ad::Tape& tape = *y_mm.tape();
  Var mask = tape.constant(selection_mask(y_mm.rows(), selection));
  Var targets = detach_targets ? ad::add(ad::detach(y_v), ad::detach(y_a)) : ad::add(y_v, y_a);
  Var masked = ad::scale_rows(targets, mask);
  return reduce(ad::scale(ad::sum(ad::mul(masked, ad::log(y_mm))), -1.0), reduction,
                selection.size());
}

Var total_mm_loss(Var ce, Var cons, double beta) {
  if (!(beta >= 0.0)) throw ContractViolation("total_mm_loss: beta must be non-negative");
  return ad::add(ce, ad::scale(cons, beta));
}

BranchOutputs branches_forward(Var visual, Var audio, const ModelWeights<Var>& w,
                               const AcpOptions& acp, bool unimodal_through_acp) {
  BranchOutputs out;
  out.acp = acp_forward(visual, audio, w.acp, acp);
  const std::array<Var, 2> joint{out.acp.v_bar, out.acp.a_bar};
  out.y_mm = head_forward(ad::concat_cols(joint), w.mm);
  Var v_in = unimodal_through_acp ? out.acp.v_bar : ad::detach(out.acp.v_bar);
  Var a_in = unimodal_through_acp ? out.acp.a_bar : ad::detach(out.acp.a_bar);
  out.y_v = head_forward(v_in, w.visual);
  out.y_a = head_forward(a_in, w.audio);
  return out;
}

}  // namespace clc
