// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Temporal heads for the multi-modal, visual and audio branches, and every
// loss term the branches are trained with.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "clc/acp.h"
#include "clc/autodiff.h"
#include "clc/model.h"

namespace clc {

/// Column of the class-probability matrices that holds the highlight class.
inline constexpr std::size_t kHighlightClass = 1;

enum class Reduction { kSum, kMean };

/// Signalled when a multi-modal loss is requested over an empty selection.
class NoCleanSamples : public std::runtime_error {
 public:
  NoCleanSamples() : std::runtime_error("no clean samples selected") {}
};

/// One direction of a gated recurrent layer; returns the T x H hidden states
/// in time order. Recorded as a single tape node with its own backward pass.
ad::Var gru_sequence(ad::Var x, const GruWeights<ad::Var>& w, bool reverse);

/// Same recurrence built from elementary tape operations, one step at a time.
ad::Var gru_sequence_unfused(ad::Var x, const GruWeights<ad::Var>& w, bool reverse);

/// Bidirectional recurrence, concatenated states, linear classifier and
/// two-way softmax. Returns T x 2 class probabilities.
ad::Var head_forward(ad::Var features, const HeadWeights<ad::Var>& head);

/// T x 2 one-hot targets; label 1 maps to kHighlightClass.
Tensor one_hot(std::span<const std::uint8_t> labels);

/// -log y_i[g_i] for every row, with the log input clamped at kLogEpsilon.
std::vector<double> per_sample_ce(const Tensor& probs, std::span<const std::uint8_t> labels);

/// Cross-entropy summed over every sample (averaged with kMean).
ad::Var uni_modal_loss(ad::Var probs, std::span<const std::uint8_t> labels,
                       Reduction reduction = Reduction::kSum);

/// Cross-entropy over the selected rows only.
ad::Var mm_ce_loss(ad::Var probs, std::span<const std::uint8_t> labels,
                   std::span<const std::size_t> selection, Reduction reduction = Reduction::kSum);

/// -sum_{i in sel} sum_c (y_v[i,c] + y_a[i,c]) log y_mm[i,c]. With
/// `detach_targets` the uni-modal probabilities carry no gradient.
ad::Var consistency_loss(ad::Var y_mm, ad::Var y_v, ad::Var y_a,
                         std::span<const std::size_t> selection,
                         Reduction reduction = Reduction::kSum, bool detach_targets = true);

/// ce + beta * cons.
ad::Var total_mm_loss(ad::Var ce, ad::Var cons, double beta);

struct LossBundle {
  double visual = 0.0;
  double audio = 0.0;
  double mm_ce = 0.0;
  double mm_cons = 0.0;
  double mm_total = 0.0;
  double beta = 0.1;
};

struct BranchOutputs {
  AcpVars acp;
  ad::Var y_mm;
  ad::Var y_v;
  ad::Var y_a;
};

/// Runs the cross-propagation block and all three heads on one window. When
/// `unimodal_through_acp` is false the uni-modal heads see detached features.
BranchOutputs branches_forward(ad::Var visual, ad::Var audio, const ModelWeights<ad::Var>& w,
                               const AcpOptions& acp, bool unimodal_through_acp);

}  // namespace clc
