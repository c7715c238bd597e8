// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "clc/acp.h"
#include "clc/model.h"
#include "oracles.h"

namespace clc {
namespace {

using ad::Tape;
using ad::Var;

Tensor gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t(r, c);
  for (double& v : t.data()) v = n(rng);
  return t;
}

double max_diff(const Tensor& a, const oracle::Matrix& b) {
  return max_abs_diff(a, oracle::to_tensor(b));
}

TEST(ProjectAudio, ZeroInputGivesReluBias) {
  std::mt19937_64 rng(1);
  Tape t;
  const Linear<Var> h{t.constant(gaussian(6, 4, rng)),
                      t.constant(Tensor::from_rows({{-1.0, 0.5, 2.0, 0.0}}))};
  const Tensor a = project_audio(t.constant(Tensor(3, 6)), h).value();
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a(i, 0), 0.0);
    EXPECT_EQ(a(i, 1), 0.5);
    EXPECT_EQ(a(i, 2), 2.0);
    EXPECT_EQ(a(i, 3), 0.0);
  }
}

TEST(ProjectAudio, IdentityPassesNonNegativeInput) {
  std::mt19937_64 rng(2);
  Tensor x = gaussian(4, 5, rng);
  for (double& v : x.data()) v = std::abs(v);
  Tape t;
  const Linear<Var> h{t.constant(Tensor::identity(5)), t.constant(Tensor(1, 5))};
  EXPECT_EQ(project_audio(t.constant(x), h).value(), x);
}

TEST(ProjectAudio, MatchesDenseOracle) {
  std::mt19937_64 rng(3);
  const Tensor x = gaussian(4, 6, rng), w = gaussian(6, 8, rng), b = gaussian(1, 8, rng);
  Tape t;
  const Tensor got = project_audio(t.constant(x), {t.constant(w), t.constant(b)}).value();
  auto want = oracle::multiply(oracle::to_matrix(x), oracle::to_matrix(w));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 8; ++j) want[i][j] = std::max(0.0, want[i][j] + b(0, j));
  EXPECT_LE(max_diff(got, want), 1e-12);
}

TEST(ProjectAudio, DimensionMismatch) {
  Tape t;
  EXPECT_THROW(project_audio(t.constant(Tensor(2, 3)), {t.constant(Tensor(4, 2)), t.constant(Tensor(1, 2))}),
               ContractViolation);
}

TEST(SelfAttend, SingletonWeightIsOne) {
  std::mt19937_64 rng(4);
  const Tensor x = gaussian(1, 4, rng), w3 = gaussian(4, 4, rng);
  Tape t;
  Var weights;
  const Tensor out = self_attend(t.constant(x), t.constant(gaussian(4, 4, rng)),
                                 t.constant(gaussian(4, 4, rng)), t.constant(w3), &weights)
                         .value();
  EXPECT_EQ(weights.value(), Tensor(1, 1, 1.0));
  EXPECT_LE(max_abs_diff(out, matmul(x, w3)), 1e-15);
}

TEST(SelfAttend, ZeroQueryKeyGivesUniformMean) {
  std::mt19937_64 rng(5);
  const Tensor x = gaussian(5, 4, rng), w3 = gaussian(4, 4, rng);
  Tape t;
  const Tensor out = self_attend(t.constant(x), t.constant(Tensor(4, 4)), t.constant(Tensor(4, 4)),
                                 t.constant(w3))
                         .value();
  const Tensor xv = matmul(x, w3);
  for (std::size_t j = 0; j < 4; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 5; ++i) mean += xv(i, j) / 5.0;
    for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(out(i, j), mean, 1e-14);
  }
}

TEST(CrossAttend, IdenticalKeyRowsGiveIdenticalOutputs) {
  std::mt19937_64 rng(6);
  const Tensor row = gaussian(1, 4, rng);
  Tensor kv(3, 4);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) kv(i, j) = row(0, j);
  Tape t;
  const Tensor out = cross_attend(t.constant(gaussian(3, 4, rng)), t.constant(kv),
                                  t.constant(gaussian(4, 4, rng)), t.constant(gaussian(4, 4, rng)),
                                  t.constant(gaussian(4, 4, rng)))
                         .value();
  for (std::size_t i = 1; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(out(i, j), out(0, j), 1e-14);
}

TEST(CrossAttend, SingletonIsValueProjection) {
  std::mt19937_64 rng(7);
  const Tensor kv = gaussian(1, 4, rng), wv = gaussian(4, 4, rng);
  Tape t;
  const Tensor out = cross_attend(t.constant(gaussian(1, 4, rng)), t.constant(kv),
                                  t.constant(gaussian(4, 4, rng)), t.constant(gaussian(4, 4, rng)),
                                  t.constant(wv))
                         .value();
  EXPECT_LE(max_abs_diff(out, matmul(kv, wv)), 1e-15);
}

TEST(CrossAttend, ShapeMismatch) {
  Tape t;
  const Var w = t.constant(Tensor(4, 4));
  EXPECT_THROW(cross_attend(t.constant(Tensor(3, 4)), t.constant(Tensor(2, 4)), w, w, w),
               ContractViolation);
}

TEST(CrossCorrelation, OrthogonalRowsGiveZero) {
  Tensor v(2, 4), a(2, 4);
  v(0, 0) = 1.0;
  v(1, 1) = 2.0;
  a(0, 2) = 3.0;
  a(1, 3) = -1.0;
  Tape t;
  const auto [cv, ca] = cross_correlation(t.constant(v), t.constant(a));
  EXPECT_EQ(cv.value(), Tensor::zeros(2, 2));
  EXPECT_EQ(ca.value(), Tensor::zeros(2, 2));
}

TEST(CrossCorrelation, SelfCorrelationIsSymmetric) {
  std::mt19937_64 rng(8);
  Tensor v = gaussian(4, 3, rng);
  for (double& x : v.data()) x = std::abs(x);
  Tape t;
  const Tensor c = cross_correlation(t.constant(v), t.constant(v)).first.value();
  EXPECT_EQ(c, transpose(c));
}

TEST(CrossCorrelation, DirectOracleAndTransposeDuality) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor v = gaussian(3, 4, rng), a = gaussian(3, 4, rng);
    Tape t;
    const auto [cv, ca] = cross_correlation(t.constant(v), t.constant(a));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < 4; ++k) dot += v(i, k) * a(j, k);
        EXPECT_NEAR(cv.value()(i, j), std::max(0.0, dot / 2.0), 1e-12);
      }
    EXPECT_EQ(ca.value(), transpose(cv.value()));
  }
}

TEST(Fuse, ZeroOutputLayerGivesBias) {
  std::mt19937_64 rng(10);
  Tape t;
  const Tensor bias = gaussian(1, 4, rng);
  const Linear<Var> in{t.constant(gaussian(12, 4, rng)), t.constant(gaussian(1, 4, rng))};
  const Linear<Var> out{t.constant(Tensor(4, 4)), t.constant(bias)};
  const Tensor y = fuse(t.constant(gaussian(3, 4, rng)), t.constant(gaussian(3, 4, rng)),
                        t.constant(gaussian(3, 4, rng)), in, out)
                       .value();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(y(i, j), bias(0, j));
}

TEST(Fuse, ShapeMismatch) {
  Tape t;
  const Linear<Var> l{t.constant(Tensor(12, 4)), t.constant(Tensor(1, 4))};
  EXPECT_THROW(fuse(t.constant(Tensor(3, 4)), t.constant(Tensor(3, 4)), t.constant(Tensor(2, 4)), l, l),
               ContractViolation);
}

TEST(Fuse, GateAnnihilation) {
  std::mt19937_64 rng(11);
  Tape t;
  const Tensor cross = gaussian(3, 4, rng);
  const Var gated = gate_cross(t.constant(cross), t.constant(Tensor(3, 3)), false);
  EXPECT_EQ(gated.value(), Tensor::zeros(3, 4));
}

TEST(Gate, RowMassScalesRows) {
  Tape t;
  const Tensor cross = Tensor::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const Tensor corr = Tensor::from_rows({{0.5, 1.5}, {0.0, 3.0}});
  EXPECT_EQ(gate_cross(t.constant(cross), t.constant(corr), false).value(),
            Tensor::from_rows({{2.0, 4.0}, {9.0, 12.0}}));
  EXPECT_EQ(gate_cross(t.constant(cross), t.constant(corr), true).value(),
            Tensor::from_rows({{1.0, 2.0}, {4.5, 6.0}}));
}

class AcpOracle : public ::testing::TestWithParam<int> {};

TEST_P(AcpOracle, MatchesTermByTermTranscription) {
  const int seed = GetParam();
  std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
  const std::size_t t = 1 + rng() % 8;
  const std::size_t d = 2 + rng() % 15;
  const std::size_t dv = (seed % 2 == 0) ? d : 3 + rng() % 10;
  const std::size_t da = 2 + rng() % 12;
  const ModelParams p = init_params({dv, da, d, 4}, static_cast<std::uint64_t>(seed));
  const Tensor v = gaussian(t, dv, rng), a = gaussian(t, da, rng);
  for (bool normalize : {false, true}) {
    const AcpOutput got = acp_forward(v, a, p.acp, {true, normalize});
    const oracle::AcpResult want = oracle::acp(v, a, p.acp, true, normalize);
    EXPECT_LE(max_diff(got.v_bar, want.v_bar), 1e-10);
    EXPECT_LE(max_diff(got.a_bar, want.a_bar), 1e-10);
    EXPECT_LE(max_diff(got.corr_v, want.corr_v), 1e-12);
    EXPECT_EQ(got.corr_a, transpose(got.corr_v));
  }
  const AcpOutput plain = acp_forward(v, a, p.acp, {false, false});
  const oracle::AcpResult want = oracle::acp(v, a, p.acp, false, false);
  EXPECT_LE(max_diff(plain.v_bar, want.v_bar), 1e-12);
  EXPECT_LE(max_diff(plain.a_bar, want.a_bar), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, AcpOracle, ::testing::Range(1, 21));

TEST(AcpForward, SingleShotVideo) {
  const ModelParams p = init_params({6, 5, 6, 3}, 1);
  std::mt19937_64 rng(12);
  const AcpOutput out = acp_forward(gaussian(1, 6, rng), gaussian(1, 5, rng), p.acp);
  EXPECT_EQ(out.v_self_attention, Tensor(1, 1, 1.0));
  EXPECT_EQ(out.a_cross_attention, Tensor(1, 1, 1.0));
  EXPECT_TRUE(out.v_bar.all_finite());
}

TEST(AcpForward, ZeroAudioKillsVisualGate) {
  ModelParams p = init_params({6, 5, 6, 3}, 2);
  p.acp.audio_proj.bias = Tensor(1, 6);
  std::mt19937_64 rng(13);
  const AcpOutput out = acp_forward(gaussian(4, 6, rng), Tensor(4, 5), p.acp);
  EXPECT_EQ(out.corr_v, Tensor::zeros(4, 4));
}

// With every v.a inner product <= 0 the cross terms vanish, so replacing the
// cross-attention weights must not change anything.
TEST(AcpForward, NonPositiveCorrelationRemovesCrossBranch) {
  ModelParams p = init_params({4, 4, 4, 3}, 3);
  p.acp.visual_in.reset();
  p.acp.audio_proj.weight = Tensor::identity(4);
  p.acp.audio_proj.bias = Tensor(1, 4);
  std::mt19937_64 rng(14);
  Tensor v = gaussian(5, 4, rng), a = gaussian(5, 4, rng);
  for (std::size_t i = 0; i < 5; ++i) {
    v(i, 2) = v(i, 3) = 0.0;
    a(i, 0) = a(i, 1) = 0.0;
    a(i, 2) = std::abs(a(i, 2));
    a(i, 3) = std::abs(a(i, 3));
  }
  const AcpOutput base = acp_forward(v, a, p.acp);
  ModelParams q = p;
  for (std::size_t k : {3u, 4u, 5u}) {
    q.acp.visual[k] = gaussian(4, 4, rng);
    q.acp.audio[k] = gaussian(4, 4, rng);
  }
  const AcpOutput other = acp_forward(v, a, q.acp);
  EXPECT_EQ(base.corr_v, Tensor::zeros(5, 5));
  EXPECT_EQ(base.v_bar, other.v_bar);
  EXPECT_EQ(base.a_bar, other.a_bar);
}

TEST(AcpForward, TemporalPermutationEquivariance) {
  const ModelParams p = init_params({7, 5, 6, 3}, 4);
  std::mt19937_64 rng(15);
  const Tensor v = gaussian(6, 7, rng), a = gaussian(6, 5, rng);
  const std::size_t perm[6] = {4, 2, 0, 5, 1, 3};
  Tensor pv(6, 7), pa(6, 5);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = 0; j < 7; ++j) pv(i, j) = v(perm[i], j);
    for (std::size_t j = 0; j < 5; ++j) pa(i, j) = a(perm[i], j);
  }
  const AcpOutput base = acp_forward(v, a, p.acp);
  const AcpOutput moved = acp_forward(pv, pa, p.acp);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_NEAR(moved.v_bar(i, j), base.v_bar(perm[i], j), 1e-12);
      EXPECT_NEAR(moved.a_bar(i, j), base.a_bar(perm[i], j), 1e-12);
    }
}

TEST(AcpForward, ShotCountMismatch) {
  const ModelParams p = init_params({6, 5, 6, 3}, 1);
  EXPECT_THROW(acp_forward(Tensor(3, 6), Tensor(4, 5), p.acp), ContractViolation);
}

}  // namespace
}  // namespace clc
