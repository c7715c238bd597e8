// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Per-video feature sequences, the CLCF binary container, and the synthetic
// benchmark generator with controllable label noise.
//
// CLCF layout (all integers little-endian):
//   "CLCF"               4 bytes magic
//   version              u8 (currently 1)
//   video count          u32
//   per video:
//     id length          u32, followed by that many UTF-8 bytes
//     T, d_v, d_a        u32 each
//     visual             T * d_v float32, row-major
//     audio              T * d_a float32, row-major
//     label presence     u8 (0 or 1)
//     labels             T bytes (0 or 1) when present

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "clc/tensor.h"

namespace clc {

/// Parse failure in a CLCF file; `offset()` is the byte position at which the
/// problem was detected.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FeatureSequence {
  std::string id;
  Tensor visual;  // T x d_v
  Tensor audio;   // T x d_a
  std::optional<std::vector<std::uint8_t>> labels;

  std::size_t length() const { return visual.rows(); }
};

/// Throws ContractViolation unless shapes agree, values are finite and labels
/// (if any) are binary with length T.
void validate(const FeatureSequence& seq);

inline constexpr char kFeatureMagic[4] = {'C', 'L', 'C', 'F'};
inline constexpr std::uint8_t kFeatureVersion = 1;

std::vector<std::uint8_t> encode_features(std::span<const FeatureSequence> seqs);
std::vector<FeatureSequence> decode_features(std::span<const std::uint8_t> bytes);

void write_features(std::span<const FeatureSequence> seqs, const std::filesystem::path& path);
std::vector<FeatureSequence> load_features(const std::filesystem::path& path);

/// Rounds every entry to the nearest float32, so a later write/load cycle is
/// lossless.
void round_to_float(Tensor& t);

struct SynthConfig {
  std::size_t train_videos = 10;
  std::size_t test_videos = 5;
  std::size_t shots = 500;
  std::size_t visual_dim = 16;
  std::size_t audio_dim = 24;
  std::size_t segments = 4;
  std::size_t segment_min = 20;
  std::size_t segment_max = 60;
  double snr_visual = 1.0;
  double snr_audio = 1.0;
  double flip_rate = 0.0;
  std::size_t dilation = 0;
  std::uint64_t seed = 1;
};

/// Throws ContractViolation for out-of-range fields.
void validate(const SynthConfig& cfg);

struct SynthDataset {
  std::vector<FeatureSequence> train;  // noisy labels
  std::vector<FeatureSequence> test;   // clean labels
  /// Clean ground truth for the training videos, parallel to `train`.
  std::vector<std::vector<std::uint8_t>> train_truth;
};

SynthDataset synth_generate(const SynthConfig& cfg);

/// Dilates every positive run by `dilation` shots on each side, then flips
/// each label independently with probability `flip_rate`.
std::vector<std::uint8_t> inject_noise(std::span<const std::uint8_t> labels, double flip_rate,
                                       std::size_t dilation, std::uint64_t seed);

/// Splits 64-bit seeds for per-item streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace clc
