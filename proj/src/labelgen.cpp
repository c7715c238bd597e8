// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/labelgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace clc {

void validate(const ShotTable& table) {
  for (std::size_t i = 0; i < table.shots.size(); ++i) {
    const Shot& s = table.shots[i];
    const std::string where = "shot table row " + std::to_string(i + 1) + ": ";
    if (s.end_frame < s.start_frame) throw ContractViolation(where + "end frame before start frame");
    if (s.scene < 0) throw ContractViolation(where + "negative scene id");
    if (i > 0) {
      const Shot& prev = table.shots[i - 1];
      if (s.start_frame != prev.end_frame + 1) {
        throw ContractViolation(where + "shots must be sorted, non-overlapping and contiguous");
      }
      if (s.scene < prev.scene) throw ContractViolation(where + "scene ids must be non-decreasing");
    }
  }
}

ShotTable read_shot_table(std::istream& in) {
  ShotTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    Shot shot;
    if (!(fields >> shot.id)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw ContractViolation("shot table line " + std::to_string(line_no) + ": malformed row");
    }
    std::string extra;
    if (!(fields >> shot.start_frame >> shot.end_frame >> shot.scene) || (fields >> extra)) {
      throw ContractViolation("shot table line " + std::to_string(line_no) +
                              ": expected 'shot_id start_frame end_frame scene_id'");
    }
    table.shots.push_back(shot);
  }
  validate(table);
  return table;
}

ShotTable read_shot_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open shot table " + path.string());
  return read_shot_table(in);
}

void write_shot_table(const ShotTable& table, std::ostream& out) {
  out << "# shot_id start_frame end_frame scene_id\n";
  for (const Shot& s : table.shots) {
    out << s.id << ' ' << s.start_frame << ' ' << s.end_frame << ' ' << s.scene << '\n';
  }
}

namespace {

std::vector<double> row_norms(const Tensor& x) {
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    norms[i] = std::sqrt(sq);
  }
  return norms;
}

}  // namespace

MatchResult match_trailer_shots(const Tensor& trailer, const Tensor& movie, double threshold) {
  if (trailer.cols() != movie.cols()) {
    throw ContractViolation("match_trailer_shots: trailer dimension " +
                            std::to_string(trailer.cols()) + " vs movie " +
                            std::to_string(movie.cols()));
  }
  MatchResult result;
  const std::vector<double> tn = row_norms(trailer);
  const std::vector<double> mn = row_norms(movie);
  for (double n : tn) result.skipped_trailer += n == 0.0;
  for (double n : mn) result.skipped_movie += n == 0.0;

  for (std::size_t i = 0; i < trailer.rows(); ++i) {
    if (tn[i] == 0.0) continue;
    const auto t_row = trailer.row(i);
    std::optional<Match> best;
    for (std::size_t j = 0; j < movie.rows(); ++j) {
      if (mn[j] == 0.0) continue;
      const auto m_row = movie.row(j);
      double dot = 0.0;
      for (std::size_t c = 0; c < t_row.size(); ++c) dot += t_row[c] * m_row[c];
      const double sim = dot / (tn[i] * mn[j]);
      if (!best || sim > best->similarity) best = Match{i, j, sim};
    }
    if (best && best->similarity >= threshold) result.matches.push_back(*best);
  }
  return result;
}

const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kTrailerMatched:
      return "trailer-matched";
    case Provenance::kSceneExpanded:
      return "scene-expanded";
    case Provenance::kBackground:
      return "background";
  }
  return "background";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "trailer-matched") return Provenance::kTrailerMatched;
  if (s == "scene-expanded") return Provenance::kSceneExpanded;
  if (s == "background") return Provenance::kBackground;
  throw ContractViolation("unknown provenance '" + s + "'");
}

std::vector<std::uint8_t> LabelTrack::binary() const {
  std::vector<std::uint8_t> out;
  out.reserve(labels.size());
  for (const ShotLabel& l : labels) out.push_back(l.label);
  return out;
}

double LabelTrack::positive_proportion() const {
  if (labels.empty()) return 0.0;
  const auto positives = std::count_if(labels.begin(), labels.end(),
                                       [](const ShotLabel& l) { return l.label == 1; });
  return static_cast<double>(positives) / static_cast<double>(labels.size());
}

LabelTrack expand_to_scenes(const std::vector<Match>& matches, const ShotTable& shots) {
  LabelTrack track;
  track.labels.resize(shots.size());
  track.shot_ids.reserve(shots.size());
  for (const Shot& s : shots.shots) track.shot_ids.push_back(s.id);

  std::set<std::int64_t> scenes;
  for (const Match& m : matches) {
    if (m.movie_shot >= shots.size()) {
      throw ContractViolation("expand_to_scenes: matched movie shot " +
                              std::to_string(m.movie_shot) + " is not in the shot table");
    }
    scenes.insert(shots.shots[m.movie_shot].scene);
  }
  for (std::size_t i = 0; i < shots.size(); ++i) {
    if (scenes.count(shots.shots[i].scene) != 0) {
      track.labels[i].label = 1;
      track.labels[i].provenance = Provenance::kSceneExpanded;
    }
  }
  for (const Match& m : matches) {
    ShotLabel& l = track.labels[m.movie_shot];
    l.provenance = Provenance::kTrailerMatched;
    l.similarity = l.similarity ? std::max(*l.similarity, m.similarity) : m.similarity;
  }
  return track;
}

LabelBuildResult build_training_labels(const Tensor& trailer, const Tensor& movie,
                                       const ShotTable& shots, double threshold) {
  if (movie.rows() != shots.size()) {
    throw ContractViolation("build_training_labels: movie has " + std::to_string(movie.rows()) +
                            " feature rows but the shot table lists " +
                            std::to_string(shots.size()) + " shots");
  }
  const MatchResult matched = match_trailer_shots(trailer, movie, threshold);
  LabelBuildResult result;
  result.track = expand_to_scenes(matched.matches, shots);
  result.matched_trailer_shots = matched.matches.size();
  std::set<std::size_t> movie_shots;
  std::set<std::int64_t> scenes;
  for (const Match& m : matched.matches) {
    movie_shots.insert(m.movie_shot);
    scenes.insert(shots.shots[m.movie_shot].scene);
  }
  result.matched_movie_shots = movie_shots.size();
  result.positive_scenes = scenes.size();
  result.skipped_trailer = matched.skipped_trailer;
  result.skipped_movie = matched.skipped_movie;
  result.positive_proportion = result.track.positive_proportion();
  return result;
}

void write_label_track(const LabelTrack& track, std::ostream& out, const std::string& fingerprint) {
  out << "# clc-labels";
  if (!fingerprint.empty()) out << " fingerprint=" << fingerprint;
  out << "\n# shot_id label provenance similarity\n";
  char buf[32];
  for (std::size_t i = 0; i < track.labels.size(); ++i) {
    const ShotLabel& l = track.labels[i];
    out << track.shot_ids[i] << ' ' << static_cast<int>(l.label) << ' ' << to_string(l.provenance)
        << ' ';
    if (l.similarity) {
      std::snprintf(buf, sizeof(buf), "%.17g", *l.similarity);
      out << buf;
    } else {
      out << '-';
    }
    out << '\n';
  }
}

LabelTrack read_label_track(std::istream& in) {
  LabelTrack track;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::int64_t id = 0;
    int label = 0;
    std::string provenance;
    std::string similarity;
    if (!(fields >> id >> label >> provenance >> similarity) || (label != 0 && label != 1)) {
      throw ContractViolation("label track line " + std::to_string(line_no) + ": malformed row");
    }
    ShotLabel l;
    l.label = static_cast<std::uint8_t>(label);
    l.provenance = provenance_from_string(provenance);
    if (similarity != "-") l.similarity = std::stod(similarity);
    track.shot_ids.push_back(id);
    track.labels.push_back(l);
  }
  return track;
}

}  // namespace clc
