// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "clc/branches.h"

namespace clc {

std::vector<double> median_filter(std::span<const double> y, std::size_t k) {
  std::vector<double> s(y.begin(), y.end());
  const std::size_t t = y.size();
  if (k == 0 || t < 2 * k + 1) return s;
  std::vector<double> window(2 * k + 1);
  // 0-based centre c covers [c - k, c + k]; the full window fits for
  // k <= c <= t - 1 - k.
  for (std::size_t c = k; c + k < t; ++c) {
    std::copy(y.begin() + static_cast<std::ptrdiff_t>(c - k),
              y.begin() + static_cast<std::ptrdiff_t>(c + k + 1), window.begin());
    std::nth_element(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(k), window.end());
    s[c] = window[k];
  }
  return s;
}

std::optional<double> average_precision(std::span<const double> scores,
                                        std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("average_precision: " + std::to_string(scores.size()) + " scores vs " +
                            std::to_string(labels.size()) + " labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hits = 0;
  double precision_sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] == 1) {
      ++hits;
      precision_sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) return std::nullopt;
  return precision_sum / static_cast<double>(hits);
}

std::vector<double> predict_scores(const Model& model, const FeatureSequence& seq,
                                   std::size_t window, const AcpOptions& acp) {
  if (window == 0) throw ContractViolation("predict_scores: window must be positive");
  std::vector<double> scores;
  scores.reserve(seq.length());
  for (std::size_t start = 0; start < seq.length(); start += window) {
    const std::size_t len = std::min(window, seq.length() - start);
    ad::Tape tape;
    const ModelWeights<ad::Var> w = bind(tape, model.params, false);
    const AcpVars feats = acp_forward(tape.constant(slice_rows(seq.visual, start, len)),
                                      tape.constant(slice_rows(seq.audio, start, len)), w.acp, acp);
    const std::array<ad::Var, 2> joint{feats.v_bar, feats.a_bar};
    const Tensor probs = head_forward(ad::concat_cols(joint), w.mm).value();
    for (std::size_t i = 0; i < len; ++i) scores.push_back(probs(i, kHighlightClass));
  }
  return scores;
}

double mean_ap(std::span<const VideoScore> videos) {
  if (videos.empty()) return 0.0;
  // Sum in id order so the result does not depend on input order.
  std::vector<const VideoScore*> sorted;
  for (const auto& v : videos) sorted.push_back(&v);
  std::sort(sorted.begin(), sorted.end(),
            [](const VideoScore* a, const VideoScore* b) { return a->id < b->id; });
  double total = 0.0;
  for (const VideoScore* v : sorted) total += v->ap;
  return total / static_cast<double>(videos.size());
}

EvalReport evaluate(const Model& model, std::span<const FeatureSequence> videos, std::size_t k,
                    std::size_t window, const AcpOptions& acp, std::vector<ScoreCurve>* curves) {
  EvalReport report;
  report.k = k;
  for (const FeatureSequence& seq : videos) {
    if (!seq.labels) throw ContractViolation("evaluate: video '" + seq.id + "' has no labels");
    ScoreCurve curve;
    curve.id = seq.id;
    curve.raw = predict_scores(model, seq, window, acp);
    curve.filtered = median_filter(curve.raw, k);
    const auto ap = average_precision(curve.filtered, *seq.labels);
    if (ap) {
      const auto positives =
          static_cast<std::size_t>(std::count(seq.labels->begin(), seq.labels->end(), 1));
      report.videos.push_back({seq.id, seq.length(), positives, *ap});
    } else {
      report.excluded.push_back(seq.id);
    }
    if (curves != nullptr) curves->push_back(std::move(curve));
  }
  std::sort(report.videos.begin(), report.videos.end(),
            [](const VideoScore& a, const VideoScore& b) { return a.id < b.id; });
  std::sort(report.excluded.begin(), report.excluded.end());
  report.map = mean_ap(report.videos);
  return report;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_report(const EvalReport& report, std::ostream& out) {
  out << "# clc-eval fingerprint=" << report.fingerprint << " checkpoint=" << report.checkpoint_hash
      << " k=" << report.k << "\n";
  out << "video_id\tT\tpositives\tAP\n";
  for (const VideoScore& v : report.videos) {
    out << v.id << '\t' << v.shots << '\t' << v.positives << '\t' << fmt_double(v.ap) << '\n';
  }
  for (const std::string& id : report.excluded) out << "# excluded (no positives): " << id << '\n';
  out << "mAP\t" << report.videos.size() << "\t-\t" << fmt_double(report.map) << '\n';
}

void write_curve(const ScoreCurve& curve, std::ostream& out, const std::string& fingerprint) {
  out << "# clc-curve video=" << curve.id;
  if (!fingerprint.empty()) out << " fingerprint=" << fingerprint;
  out << "\nshot_id\traw\tfiltered\n";
  for (std::size_t i = 0; i < curve.raw.size(); ++i) {
    out << i << '\t' << fmt_double(curve.raw[i]) << '\t' << fmt_double(curve.filtered[i]) << '\n';
  }
}

}  // namespace clc
