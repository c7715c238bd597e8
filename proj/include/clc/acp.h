// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Augmented cross-propagation: audio projection, per-modality self-attention,
// cross-modal attention, ReLU cross-correlation gating and fusion.

#pragma once

#include <utility>

#include "clc/autodiff.h"
#include "clc/model.h"
#include "clc/tensor.h"

namespace clc {

struct AcpOptions {
  /// When false the block is bypassed and the projected features are
  /// returned unchanged (plain concatenation downstream).
  bool cross_propagation = true;
  /// Divide the cross-correlation row mass by T before gating.
  bool normalize_gate = false;
};

/// Tape-level outputs of one forward pass. Diagnostics are left invalid when
/// cross-propagation is disabled.
struct AcpVars {
  ad::Var v;  // visual features at model dimension
  ad::Var a;  // projected audio
  ad::Var v_bar;
  ad::Var a_bar;
  ad::Var v_self, a_self;
  ad::Var v_cross, a_cross;
  ad::Var v_self_attention, a_self_attention;
  ad::Var v_cross_attention, a_cross_attention;
  ad::Var corr_v, corr_a;
};

/// a = ReLU(a_hat * H + b).
ad::Var project_audio(ad::Var a_hat, const Linear<ad::Var>& h);

/// softmax((x W1)(x W2)^T / sqrt(d)) (x W3). `weights_out` receives the
/// attention map when non-null.
ad::Var self_attend(ad::Var x, ad::Var w1, ad::Var w2, ad::Var w3,
                    ad::Var* weights_out = nullptr);

/// softmax((q Wq)(kv Wk)^T / sqrt(d)) (kv Wv).
ad::Var cross_attend(ad::Var q, ad::Var kv, ad::Var wq, ad::Var wk, ad::Var wv,
                     ad::Var* weights_out = nullptr);

/// (ReLU(v a^T / sqrt(d)), ReLU(a v^T / sqrt(d))).
std::pair<ad::Var, ad::Var> cross_correlation(ad::Var v, ad::Var a);

/// Scales row i of `cross` by the row mass sum_j corr(i, j), divided by T
/// when `normalize` is set.
ad::Var gate_cross(ad::Var cross, ad::Var corr, bool normalize);

/// out( ReLU( in( [x | x_self | gated_cross] ) ) ).
ad::Var fuse(ad::Var x, ad::Var x_self, ad::Var gated_cross, const Linear<ad::Var>& in,
             const Linear<ad::Var>& out);

AcpVars acp_forward(ad::Var v_raw, ad::Var a_hat, const AcpWeights<ad::Var>& w,
                    const AcpOptions& options);

/// Tensor-level result of a gradient-free forward pass.
struct AcpOutput {
  Tensor v_bar;
  Tensor a_bar;
  Tensor v_self_attention, a_self_attention;
  Tensor v_cross_attention, a_cross_attention;
  Tensor corr_v, corr_a;
};

AcpOutput acp_forward(const Tensor& v_raw, const Tensor& a_hat, const AcpWeights<Tensor>& w,
                      const AcpOptions& options = {});

}  // namespace clc
