// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/acp.h"

#include <array>
#include <cmath>
#include <string>

namespace clc {

using ad::Var;

namespace {

Var attend(Var q, Var k, Var v, Var wq, Var wk, Var wv, Var* weights_out) {
  if (q.rows() != k.rows() || q.cols() != k.cols()) {
    throw ContractViolation("attention: query " + q.value().shape_string() + " and key/value " +
                            k.value().shape_string() + " must share T and d");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var scores = ad::scale(ad::matmul(ad::matmul(q, wq), ad::transpose(ad::matmul(k, wk))),
                         inv_sqrt_d);
  Var weights = ad::softmax_rows(scores);
  if (weights_out != nullptr) *weights_out = weights;
  return ad::matmul(weights, ad::matmul(v, wv));
}

}  // namespace

Var project_audio(Var a_hat, const Linear<Var>& h) {
  if (a_hat.cols() != h.weight.rows()) {
    throw ContractViolation("project_audio: audio dimension " + std::to_string(a_hat.cols()) +
                            " does not match projector input " +
                            std::to_string(h.weight.rows()));
  }
  return ad::relu(ad::linear(a_hat, h.weight, h.bias));
}

Var self_attend(Var x, Var w1, Var w2, Var w3, Var* weights_out) {
  if (x.rows() == 0) throw ContractViolation("self_attend: empty sequence");
  return attend(x, x, x, w1, w2, w3, weights_out);
}

Var cross_attend(Var q, Var kv, Var wq, Var wk, Var wv, Var* weights_out) {
  return attend(q, kv, kv, wq, wk, wv, weights_out);
}

std::pair<Var, Var> cross_correlation(Var v, Var a) {
  if (!v.value().same_shape(a.value())) {
    throw ContractViolation("cross_correlation: " + v.value().shape_string() + " vs " +
                            a.value().shape_string());
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(v.cols()));
  Var corr_v = ad::relu(ad::scale(ad::matmul(v, ad::transpose(a)), inv_sqrt_d));
  Var corr_a = ad::relu(ad::scale(ad::matmul(a, ad::transpose(v)), inv_sqrt_d));
  return {corr_v, corr_a};
}

Var gate_cross(Var cross, Var corr, bool normalize) {
  Var mass = ad::row_sum(corr);
  if (normalize) mass = ad::scale(mass, 1.0 / static_cast<double>(corr.cols()));
  return ad::scale_rows(cross, mass);
}

Var fuse(Var x, Var x_self, Var gated_cross, const Linear<Var>& in, const Linear<Var>& out) {
  if (!x.value().same_shape(x_self.value()) || !x.value().same_shape(gated_cross.value())) {
    throw ContractViolation("fuse: inputs must all be " + x.value().shape_string());
  }
  const std::array<Var, 3> parts{x, x_self, gated_cross};
  Var hidden = ad::relu(ad::linear(ad::concat_cols(parts), in.weight, in.bias));
  return ad::linear(hidden, out.weight, out.bias);
}

AcpVars acp_forward(Var v_raw, Var a_hat, const AcpWeights<Var>& w, const AcpOptions& options) {
  if (v_raw.rows() != a_hat.rows()) {
    throw ContractViolation("acp_forward: visual has " + std::to_string(v_raw.rows()) +
                            " shots, audio has " + std::to_string(a_hat.rows()));
  }
  AcpVars out;
  if (w.visual_in) {
    if (v_raw.cols() != w.visual_in->weight.rows()) {
      throw ContractViolation("acp_forward: visual dimension mismatch");
    }
    out.v = ad::linear(v_raw, w.visual_in->weight, w.visual_in->bias);
  } else {
    if (v_raw.cols() != w.visual[0].rows()) {
      throw ContractViolation("acp_forward: visual dimension mismatch");
    }
    out.v = v_raw;
  }
  out.a = project_audio(a_hat, w.audio_proj);
  if (!options.cross_propagation) {
    out.v_bar = out.v;
    out.a_bar = out.a;
    return out;
  }

  const auto& wv = w.visual;
  const auto& wa = w.audio;
  out.v_self = self_attend(out.v, wv[0], wv[1], wv[2], &out.v_self_attention);
  out.a_self = self_attend(out.a, wa[0], wa[1], wa[2], &out.a_self_attention);
  // Visual query: W4v / W4a / W5a. Audio query: W6a / W5v / W6v.
  out.v_cross = cross_attend(out.v, out.a, wv[3], wa[3], wa[4], &out.v_cross_attention);
  out.a_cross = cross_attend(out.a, out.v, wa[5], wv[4], wv[5], &out.a_cross_attention);
  std::tie(out.corr_v, out.corr_a) = cross_correlation(out.v, out.a);

  Var gated_v = gate_cross(out.v_cross, out.corr_v, options.normalize_gate);
  Var gated_a = gate_cross(out.a_cross, out.corr_a, options.normalize_gate);
  out.v_bar = fuse(out.v, out.v_self, gated_v, w.fuse_v_in, w.fuse_v_out);
  out.a_bar = fuse(out.a, out.a_self, gated_a, w.fuse_a_in, w.fuse_a_out);
  return out;
}

AcpOutput acp_forward(const Tensor& v_raw, const Tensor& a_hat, const AcpWeights<Tensor>& w,
                      const AcpOptions& options) {
  ad::Tape tape;
  AcpWeights<Var> bound;
  if (w.visual_in) {
    bound.visual_in = Linear<Var>{tape.constant(w.visual_in->weight),
                                  tape.constant(w.visual_in->bias)};
  }
  auto bind_linear = [&](const Linear<Tensor>& l) {
    return Linear<Var>{tape.constant(l.weight), tape.constant(l.bias)};
  };
  bound.audio_proj = bind_linear(w.audio_proj);
  for (std::size_t i = 0; i < 6; ++i) {
    bound.visual[i] = tape.constant(w.visual[i]);
    bound.audio[i] = tape.constant(w.audio[i]);
  }
  bound.fuse_v_in = bind_linear(w.fuse_v_in);
  bound.fuse_v_out = bind_linear(w.fuse_v_out);
  bound.fuse_a_in = bind_linear(w.fuse_a_in);
  bound.fuse_a_out = bind_linear(w.fuse_a_out);

  const AcpVars vars = acp_forward(tape.constant(v_raw), tape.constant(a_hat), bound, options);
  AcpOutput out;
  out.v_bar = vars.v_bar.value();
  out.a_bar = vars.a_bar.value();
  if (options.cross_propagation) {
    out.v_self_attention = vars.v_self_attention.value();
    out.a_self_attention = vars.a_self_attention.value();
    out.v_cross_attention = vars.v_cross_attention.value();
    out.a_cross_attention = vars.a_cross_attention.value();
    out.corr_v = vars.corr_v.value();
    out.corr_a = vars.corr_a.value();
  }
  return out;
}

}  // namespace clc
