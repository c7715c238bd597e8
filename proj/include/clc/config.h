// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Plain-text key=value run configuration, its fingerprint, and the binary
// checkpoint container.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "clc/cleaner.h"
#include "clc/datasets.h"
#include "clc/model.h"

namespace clc {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  TrainConfig train;
  std::size_t median_k = 9;
  std::string train_path;
  std::string val_path;
  std::string test_path;
  std::string checkpoint_path = "clc.ckpt";
  std::string log_path = "train_log.jsonl";
  std::string report_path = "eval_report.tsv";
  /// Set when `tau` was given explicitly (file or flag).
  bool tau_set = false;
};

template <class Cfg>
struct ConfigKey {
  std::string name;
  std::string help;  // includes provenance where applicable
  std::function<void(Cfg&, const std::string&)> set;
  std::function<std::string(const Cfg&)> get;
  /// Paths are excluded from the fingerprint.
  bool fingerprinted = true;
};

const std::vector<ConfigKey<RunConfig>>& run_config_keys();
const std::vector<ConfigKey<SynthConfig>>& synth_config_keys();

/// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
/// malformed lines or duplicate keys.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in);

/// Applies one setting, rejecting unknown keys and malformed values.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);
void apply_setting(SynthConfig& cfg, const std::string& key, const std::string& value);

RunConfig load_run_config(const std::filesystem::path& path);
SynthConfig load_synth_config(const std::filesystem::path& path);

/// Sorted "key=value" lines over fingerprinted keys.
std::string canonical_text(const RunConfig& cfg);
std::string canonical_text(const SynthConfig& cfg);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t v);

/// Stable 16-hex-digit hash of the canonical text.
std::string fingerprint(const RunConfig& cfg);
std::string fingerprint(const SynthConfig& cfg);

/// Ablation presets switch components off, starting from `cfg`:
///   baseline     cleaning, cross-propagation, consistency and smoothing off
///   mmsc         cleaning only
///   mmsc-cp      cleaning + cross-propagation
///   mmsc-cp-cl   cleaning + cross-propagation + consistency
///   full         everything as configured
///   no-mmsc, no-cp, no-cl, no-pp   full minus one component
/// Switching off sets tau = 1, cross-propagation = false, beta = 0 or k = 0.
void apply_ablation(RunConfig& cfg, const std::string& preset);
const std::vector<std::string>& ablation_presets();

// Checkpoint container, little-endian:
//   "CLC1"          4 bytes magic
//   fingerprint     u64
//   d_v, d_a, d, H  u32 each
//   flags           u32 (bit 0 cross-propagation, bit 1 gate normalization)
//   window          u32 (inference window length)
//   count           u32 number of parameters
//   per parameter, in visit_weights order:
//     name length u32, name bytes, rows u32, cols u32, rows*cols float64
struct Checkpoint {
  Model model;
  std::uint64_t fingerprint = 0;
  AcpOptions acp;
  std::size_t window = 128;
};

inline constexpr char kCheckpointMagic[4] = {'C', 'L', 'C', '1'};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace clc
