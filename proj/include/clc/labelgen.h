// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Scene-aware label construction: every trailer shot is matched to its most
// similar movie shot, and each matched shot marks its whole scene positive.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "clc/tensor.h"

namespace clc {

struct Shot {
  std::int64_t id = 0;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;  // inclusive
  std::int64_t scene = 0;
};

/// Shots in temporal order; row i describes movie feature row i.
struct ShotTable {
  std::vector<Shot> shots;

  std::size_t size() const { return shots.size(); }
};

/// Throws ContractViolation unless shots are sorted, non-overlapping,
/// contiguous (each starts right after the previous ends) and scene ids are
/// non-negative and non-decreasing.
void validate(const ShotTable& table);

/// Whitespace-separated rows "shot_id start_frame end_frame scene_id"; blank
/// lines and '#' comments are ignored.
ShotTable read_shot_table(std::istream& in);
ShotTable read_shot_table(const std::filesystem::path& path);
void write_shot_table(const ShotTable& table, std::ostream& out);

struct Match {
  std::size_t trailer_shot = 0;
  std::size_t movie_shot = 0;
  double similarity = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchResult {
  std::vector<Match> matches;  // ordered by trailer shot
  std::size_t skipped_trailer = 0;  // zero-norm trailer rows
  std::size_t skipped_movie = 0;    // zero-norm movie rows
};

/// Exact cosine search: for each trailer row, the movie row of maximal cosine
/// similarity (earliest on ties), kept when similarity >= threshold.
MatchResult match_trailer_shots(const Tensor& trailer, const Tensor& movie, double threshold);

enum class Provenance { kTrailerMatched, kSceneExpanded, kBackground };

const char* to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct ShotLabel {
  std::uint8_t label = 0;
  Provenance provenance = Provenance::kBackground;
  std::optional<double> similarity;  // best match similarity, matched shots only

  friend bool operator==(const ShotLabel&, const ShotLabel&) = default;
};

struct LabelTrack {
  std::vector<std::int64_t> shot_ids;
  std::vector<ShotLabel> labels;

  std::vector<std::uint8_t> binary() const;
  double positive_proportion() const;

  friend bool operator==(const LabelTrack&, const LabelTrack&) = default;
};

/// Marks every shot of every scene that contains a matched shot as positive.
LabelTrack expand_to_scenes(const std::vector<Match>& matches, const ShotTable& shots);

struct LabelBuildResult {
  LabelTrack track;
  std::size_t matched_trailer_shots = 0;
  std::size_t matched_movie_shots = 0;
  std::size_t positive_scenes = 0;
  std::size_t skipped_trailer = 0;
  std::size_t skipped_movie = 0;
  double positive_proportion = 0.0;
};

LabelBuildResult build_training_labels(const Tensor& trailer, const Tensor& movie,
                                       const ShotTable& shots, double threshold);

/// Rows "shot_id label provenance similarity" with '-' for no similarity.
void write_label_track(const LabelTrack& track, std::ostream& out,
                       const std::string& fingerprint = {});
LabelTrack read_label_track(std::istream& in);

}  // namespace clc
