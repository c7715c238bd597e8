// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clc/acp.h"
#include "clc/datasets.h"
#include "clc/model.h"

namespace clc {

/// Median smoothing with half-width k. Positions whose full window would run
/// past either end (1-based i <= k or i > T - k) are copied unchanged.
std::vector<double> median_filter(std::span<const double> y, std::size_t k);

/// Average precision of the ranking by descending score, ties broken by the
/// lower index. Returns nullopt when there is no positive label.
std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels);

/// Highlight-class probability for every shot, from the cross-propagation
/// block and the multi-modal head only. The sequence is processed in
/// non-overlapping windows of `window` shots.
std::vector<double> predict_scores(const Model& model, const FeatureSequence& seq,
                                   std::size_t window, const AcpOptions& acp);

struct VideoScore {
  std::string id;
  std::size_t shots = 0;
  std::size_t positives = 0;
  double ap = 0.0;
};

struct ScoreCurve {
  std::string id;
  std::vector<double> raw;
  std::vector<double> filtered;
};

struct EvalReport {
  std::vector<VideoScore> videos;  // sorted by id
  std::vector<std::string> excluded;  // videos without positives
  double map = 0.0;
  std::size_t k = 0;
  std::string fingerprint;
  std::string checkpoint_hash;
};

/// Mean of the per-video APs.
double mean_ap(std::span<const VideoScore> videos);

/// Scores every video, smooths with `k`, computes per-video AP and the mean.
/// `curves`, when non-null, receives the raw and filtered curves.
EvalReport evaluate(const Model& model, std::span<const FeatureSequence> videos, std::size_t k,
                    std::size_t window, const AcpOptions& acp,
                    std::vector<ScoreCurve>* curves = nullptr);

/// Tab-separated report: fingerprint header, one row per video, final mAP.
void write_report(const EvalReport& report, std::ostream& out);

/// Tab-separated "shot_id raw filtered" rows under a fingerprint comment.
void write_curve(const ScoreCurve& curve, std::ostream& out, const std::string& fingerprint = {});

}  // namespace clc
