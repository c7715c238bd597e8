// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.h"

#include <random>

namespace fixture {

LabelFixture label_fixture(std::uint64_t seed) {
  constexpr std::size_t kScenes = 6, kPerScene = 6, kDim = 32;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LabelFixture f;
  f.movie = clc::Tensor(kScenes * kPerScene, kDim);
  for (double& v : f.movie.data()) v = normal(rng);
  std::int64_t frame = 0;
  for (std::size_t i = 0; i < kScenes * kPerScene; ++i) {
    const std::int64_t len = 10 + static_cast<std::int64_t>(rng() % 40);
    f.shots.shots.push_back({static_cast<std::int64_t>(i) + 100, frame, frame + len - 1,
                             static_cast<std::int64_t>(i / kPerScene)});
    frame += len;
  }
  // Copy the third shot of scenes 1, 3 and 4.
  const std::vector<std::size_t> copied{1 * kPerScene + 2, 3 * kPerScene + 2, 4 * kPerScene + 2};
  f.trailer = clc::Tensor(copied.size() + 2, kDim);
  for (std::size_t r = 0; r < copied.size(); ++r) {
    for (std::size_t c = 0; c < kDim; ++c) f.trailer(r, c) = f.movie(copied[r], c);
    f.copied_scenes.insert(f.shots.shots[copied[r]].scene);
  }
  for (std::size_t r = copied.size(); r < f.trailer.rows(); ++r) {
    for (std::size_t c = 0; c < kDim; ++c) f.trailer(r, c) = normal(rng);
  }
  f.expected_proportion = static_cast<double>(copied.size() * kPerScene) /
                          static_cast<double>(kScenes * kPerScene);
  return f;
}

}  // namespace fixture
