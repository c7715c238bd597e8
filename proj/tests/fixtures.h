// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Small hand-built inputs shared by the unit tests and the acceptance suite.

#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "clc/labelgen.h"
#include "clc/tensor.h"

namespace fixture {

/// A movie of 36 shots in 6 scenes of 6 shots, random 32-d features, and a
/// trailer made of exact copies of one shot from scenes 1, 3 and 4 plus two
/// unrelated random shots.
struct LabelFixture {
  clc::Tensor movie;
  clc::Tensor trailer;
  clc::ShotTable shots;
  std::set<std::int64_t> copied_scenes;
  double expected_proportion = 0.0;
};

LabelFixture label_fixture(std::uint64_t seed = 11);

}  // namespace fixture
