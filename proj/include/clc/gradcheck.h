// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Finite-difference check of the complete training objective on a small
// random problem.

#pragma once

#include <cstddef>
#include <cstdint>

#include "clc/autodiff.h"
#include "clc/model.h"

namespace clc {

struct GradcheckOptions {
  std::size_t shots = 6;
  ModelDims dims{10, 12, 8, 8};
  std::uint64_t seed = 7;
  double step = 1e-5;
  double beta = 0.1;
  bool cross_propagation = true;
  bool normalize_gate = false;
  /// Corrupts one analytic gradient entry so the failure path can be tested.
  bool broken = false;
};

/// The objective is the sum of the multi-modal loss (cross-entropy plus
/// beta-weighted consistency over every shot) and both uni-modal losses.
/// Every path is differentiated, so the analytic gradient is the true
/// derivative of the loss value.
ad::GradCheckReport check_objective_gradients(const GradcheckOptions& opts);

}  // namespace clc
