// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/datasets.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

namespace clc {

void validate(const FeatureSequence& seq) {
  const std::string where = "video '" + seq.id + "': ";
  if (seq.visual.rows() != seq.audio.rows()) {
    throw ContractViolation(where + "visual has " + std::to_string(seq.visual.rows()) +
                            " shots, audio has " + std::to_string(seq.audio.rows()));
  }
  if (!seq.visual.all_finite() || !seq.audio.all_finite()) {
    throw ContractViolation(where + "non-finite feature value");
  }
  if (seq.labels) {
    if (seq.labels->size() != seq.length()) {
      throw ContractViolation(where + "label track length " + std::to_string(seq.labels->size()) +
                              " != T " + std::to_string(seq.length()));
    }
    if (std::any_of(seq.labels->begin(), seq.labels->end(), [](std::uint8_t l) { return l > 1; })) {
      throw ContractViolation(where + "labels must be 0 or 1");
    }
  }
}

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t offset() const { return pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated payload reading ") + what, pos_);
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> raw(std::size_t n, const char* what) {
    need(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ContractViolation(std::string("CLCF: ") + what + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

Tensor read_matrix(ByteReader& in, std::uint32_t rows, std::uint32_t cols, const char* what) {
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  in.need(count * 4, what);
  Tensor t(rows, cols);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = in.offset();
    const float f = std::bit_cast<float>(in.u32(what));
    if (!std::isfinite(f)) throw FormatError(std::string("non-finite value in ") + what, at);
    t[i] = static_cast<double>(f);
  }
  return t;
}

}  // namespace

std::vector<std::uint8_t> encode_features(std::span<const FeatureSequence> seqs) {
  ByteWriter out;
  for (char c : kFeatureMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u8(kFeatureVersion);
  out.u32(checked_u32(seqs.size(), "video count"));
  for (const FeatureSequence& seq : seqs) {
    validate(seq);
    out.u32(checked_u32(seq.id.size(), "id length"));
    out.raw(std::span(reinterpret_cast<const std::uint8_t*>(seq.id.data()), seq.id.size()));
    out.u32(checked_u32(seq.length(), "T"));
    out.u32(checked_u32(seq.visual.cols(), "d_v"));
    out.u32(checked_u32(seq.audio.cols(), "d_a"));
    for (double v : seq.visual.data()) out.f32(static_cast<float>(v));
    for (double v : seq.audio.data()) out.f32(static_cast<float>(v));
    out.u8(seq.labels ? 1 : 0);
    if (seq.labels) out.raw(*seq.labels);
  }
  return out.take();
}

std::vector<FeatureSequence> decode_features(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  in.need(4, "magic");
  for (char c : kFeatureMagic) {
    const std::uint64_t at = in.offset();
    if (in.u8("magic") != static_cast<std::uint8_t>(c)) throw FormatError("magic mismatch", at);
  }
  const std::uint64_t version_at = in.offset();
  if (in.u8("version") != kFeatureVersion) throw FormatError("unsupported version", version_at);
  const std::uint32_t count = in.u32("video count");
  std::vector<FeatureSequence> seqs;
  for (std::uint32_t v = 0; v < count; ++v) {
    FeatureSequence seq;
    const std::uint32_t id_len = in.u32("id length");
    auto id = in.raw(id_len, "id");
    seq.id.assign(id.begin(), id.end());
    const std::uint32_t t = in.u32("T");
    const std::uint32_t dv = in.u32("d_v");
    const std::uint32_t da = in.u32("d_a");
    seq.visual = read_matrix(in, t, dv, "visual matrix");
    seq.audio = read_matrix(in, t, da, "audio matrix");
    const std::uint64_t flag_at = in.offset();
    const std::uint8_t has_labels = in.u8("label presence");
    if (has_labels > 1) throw FormatError("label presence byte must be 0 or 1", flag_at);
    if (has_labels == 1) {
      const std::uint64_t labels_at = in.offset();
      auto raw = in.raw(t, "labels");
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] > 1) throw FormatError("label byte must be 0 or 1", labels_at + i);
      }
      seq.labels.emplace(raw.begin(), raw.end());
    }
    seqs.push_back(std::move(seq));
  }
  if (!in.at_end()) throw FormatError("trailing bytes after last video", in.offset());
  return seqs;
}

void write_features(std::span<const FeatureSequence> seqs, const std::filesystem::path& path) {
  const auto bytes = encode_features(seqs);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FeatureSequence> load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_features(bytes);
}

void round_to_float(Tensor& t) {
  for (double& v : t.data()) v = static_cast<double>(static_cast<float>(v));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void validate(const SynthConfig& cfg) {
  if (cfg.train_videos == 0 || cfg.test_videos == 0 || cfg.shots == 0 || cfg.visual_dim == 0 ||
      cfg.audio_dim == 0 || cfg.segments == 0 || cfg.segment_min == 0) {
    throw ContractViolation("synth: counts and dimensions must be positive");
  }
  if (cfg.segment_min > cfg.segment_max) {
    throw ContractViolation("synth: segment_min exceeds segment_max");
  }
  if (cfg.segments * cfg.segment_max + cfg.segments + 1 > cfg.shots) {
    throw ContractViolation("synth: " + std::to_string(cfg.segments) + " segments of up to " +
                            std::to_string(cfg.segment_max) + " shots cannot fit in " +
                            std::to_string(cfg.shots) + " shots");
  }
  if (!(cfg.flip_rate >= 0.0 && cfg.flip_rate < 0.5)) {
    throw ContractViolation("synth: flip_rate must lie in [0, 0.5)");
  }
  if (!(cfg.snr_visual >= 0.0) || !(cfg.snr_audio >= 0.0)) {
    throw ContractViolation("synth: SNR must be non-negative");
  }
}

namespace {

/// Random non-overlapping segments with at least one background shot between
/// neighbours and at both ends.
std::vector<std::uint8_t> latent_track(const SynthConfig& cfg, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> length(cfg.segment_min, cfg.segment_max);
  std::vector<std::size_t> lengths(cfg.segments);
  std::size_t used = 0;
  for (auto& l : lengths) {
    l = length(rng);
    used += l;
  }
  // Spread the spare shots over segments + 1 gaps, each gap at least 1.
  const std::size_t spare = cfg.shots - used - (cfg.segments + 1);
  std::uniform_int_distribution<std::size_t> cut(0, spare);
  std::vector<std::size_t> cuts(cfg.segments);
  for (auto& c : cuts) c = cut(rng);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::uint8_t> track(cfg.shots, 0);
  std::size_t pos = 0;
  std::size_t prev_cut = 0;
  for (std::size_t s = 0; s < cfg.segments; ++s) {
    pos += 1 + (cuts[s] - prev_cut);
    prev_cut = cuts[s];
    std::fill_n(track.begin() + static_cast<std::ptrdiff_t>(pos), lengths[s], 1);
    pos += lengths[s];
  }
  return track;
}

Tensor unit_direction(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor dir(1, dim);
  double norm = 0.0;
  for (double& v : dir.data()) {
    v = normal(rng);
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : dir.data()) v /= norm;
  return dir;
}

Tensor class_features(std::span<const std::uint8_t> truth, const Tensor& direction, double snr,
                      std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor x(truth.size(), direction.cols());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double sign = truth[i] == 1 ? 0.5 : -0.5;
    for (std::size_t j = 0; j < direction.cols(); ++j) {
      x(i, j) = sign * snr * direction[j] + normal(rng);
    }
  }
  round_to_float(x);
  return x;
}

}  // namespace

std::vector<std::uint8_t> inject_noise(std::span<const std::uint8_t> labels, double flip_rate,
                                       std::size_t dilation, std::uint64_t seed) {
  if (!(flip_rate >= 0.0 && flip_rate < 0.5)) {
    throw ContractViolation("inject_noise: flip_rate must lie in [0, 0.5)");
  }
  const std::size_t n = labels.size();
  std::vector<std::uint8_t> out(labels.begin(), labels.end());
  if (dilation > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != 1) continue;
      const bool run_start = i == 0 || labels[i - 1] != 1;
      const bool run_end = i + 1 == n || labels[i + 1] != 1;
      if (run_start) {
        for (std::size_t k = 1; k <= dilation && k <= i; ++k) out[i - k] = 1;
      }
      if (run_end) {
        for (std::size_t k = 1; k <= dilation && i + k < n; ++k) out[i + k] = 1;
      }
    }
  }
  if (flip_rate > 0.0) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution flip(flip_rate);
    for (auto& l : out) {
      if (flip(rng)) l = static_cast<std::uint8_t>(1 - l);
    }
  }
  return out;
}

SynthDataset synth_generate(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 dir_rng(mix_seed(cfg.seed, 0));
  const Tensor visual_dir = unit_direction(cfg.visual_dim, dir_rng);
  const Tensor audio_dir = unit_direction(cfg.audio_dim, dir_rng);

  SynthDataset data;
  auto make_video = [&](std::size_t index, bool train) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 1000 + index));
    FeatureSequence seq;
    seq.id = (train ? "train_" : "test_") + std::to_string(index);
    std::vector<std::uint8_t> truth = latent_track(cfg, rng);
    seq.visual = class_features(truth, visual_dir, cfg.snr_visual, rng);
    seq.audio = class_features(truth, audio_dir, cfg.snr_audio, rng);
    if (train) {
      seq.labels = inject_noise(truth, cfg.flip_rate, cfg.dilation, mix_seed(cfg.seed, 500000 + index));
      data.train_truth.push_back(std::move(truth));
      data.train.push_back(std::move(seq));
    } else {
      seq.labels = std::move(truth);
      data.test.push_back(std::move(seq));
    }
  };
  for (std::size_t i = 0; i < cfg.train_videos; ++i) make_video(i, true);
  for (std::size_t i = 0; i < cfg.test_videos; ++i) make_video(cfg.train_videos + i, false);
  return data;
}

}  // namespace clc
