// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/config.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

namespace clc {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Shortest text that reads back to the same double.
std::string fmt_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    if (!value.empty() && value[0] != '-') v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError("config key '" + key + "': '" + value + "' is not a boolean");
}

template <class Cfg, class T>
ConfigKey<Cfg> number_key(std::string name, std::string help, T Cfg::*field) {
  return {name, std::move(help),
          [name, field](Cfg& c, const std::string& v) {
            if constexpr (std::is_floating_point_v<T>) {
              c.*field = parse_double(name, v);
            } else {
              c.*field = static_cast<T>(parse_uint(name, v));
            }
          },
          [field](const Cfg& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.*field);
            } else {
              return std::to_string(c.*field);
            }
          }};
}

template <class T>
ConfigKey<RunConfig> train_key(std::string name, std::string help, T TrainConfig::*field) {
  return {name, std::move(help),
          [name, field](RunConfig& c, const std::string& v) {
            if constexpr (std::is_same_v<T, bool>) {
              c.train.*field = parse_bool(name, v);
            } else if constexpr (std::is_floating_point_v<T>) {
              c.train.*field = parse_double(name, v);
            } else {
              c.train.*field = static_cast<T>(parse_uint(name, v));
            }
          },
          [field](const RunConfig& c) {
            if constexpr (std::is_same_v<T, bool>) {
              return std::string(c.train.*field ? "true" : "false");
            } else if constexpr (std::is_floating_point_v<T>) {
              return fmt_double(c.train.*field);
            } else {
              return std::to_string(c.train.*field);
            }
          }};
}

ConfigKey<RunConfig> path_key(std::string name, std::string help, std::string RunConfig::*field) {
  return {name, std::move(help), [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }, false};
}

template <class Cfg>
const ConfigKey<Cfg>& find_key(const std::vector<ConfigKey<Cfg>>& keys, const std::string& key) {
  const auto it = std::find_if(keys.begin(), keys.end(), [&](const auto& k) { return k.name == key; });
  if (it == keys.end()) throw ConfigError("unknown config key '" + key + "'");
  return *it;
}

template <class Cfg>
std::string canonical(const std::vector<ConfigKey<Cfg>>& keys, const Cfg& cfg) {
  std::map<std::string, std::string> sorted;
  for (const auto& k : keys) {
    if (k.fingerprinted) sorted[k.name] = k.get(cfg);
  }
  std::string out;
  for (const auto& [name, value] : sorted) out += name + "=" + value + "\n";
  return out;
}

std::ifstream open_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return in;
}

}  // namespace

const std::vector<ConfigKey<RunConfig>>& run_config_keys() {
  static const std::vector<ConfigKey<RunConfig>> keys = [] {
    std::vector<ConfigKey<RunConfig>> k;
    k.push_back(train_key("model-dim", "shared feature dimension d (projection size for both modalities)", &TrainConfig::model_dim));
    k.push_back(train_key("hidden", "recurrent hidden size per direction", &TrainConfig::hidden));
    k.push_back(train_key("tau", "clean sample proportion in (0, 1]; set it explicitly for real runs", &TrainConfig::tau));
    {
      auto& tau = k.back();
      auto inner = tau.set;
      tau.set = [inner](RunConfig& c, const std::string& v) {
        inner(c, v);
        c.tau_set = true;
      };
    }
    k.push_back(train_key("beta", "consistency loss weight", &TrainConfig::beta));
    k.push_back(train_key("epochs", "training epochs", &TrainConfig::epochs));
    k.push_back(train_key("lr", "SGD learning rate", &TrainConfig::learning_rate));
    k.push_back(train_key("window", "shots per training window T_w", &TrainConfig::window));
    k.push_back(train_key("seed", "initialization and shuffling seed; CLC_SEED overrides", &TrainConfig::seed));
    k.push_back(train_key("cross-propagation", "enable the cross-propagation block", &TrainConfig::cross_propagation));
    k.push_back(train_key("normalize-gate", "divide the cross-correlation row mass by T", &TrainConfig::normalize_gate));
    k.push_back(train_key("unimodal-updates-acp", "let uni-modal losses update the shared block", &TrainConfig::unimodal_updates_acp));
    k.push_back(train_key("mean-reduction", "average losses instead of summing", &TrainConfig::mean_reduction));
    k.push_back(train_key("clip-norm", "global gradient norm clip, 0 disables; 5 is a typical value", &TrainConfig::clip_norm));
    k.push_back(train_key("detach-consistency", "treat uni-modal predictions as constant targets in the consistency loss", &TrainConfig::detach_consistency_targets));
    k.push_back(number_key<RunConfig>("k", "median filter half-width", &RunConfig::median_k));
    k.push_back(path_key("train", "training features (CLCF)", &RunConfig::train_path));
    k.push_back(path_key("val", "optional validation features (CLCF)", &RunConfig::val_path));
    k.push_back(path_key("test", "test features (CLCF)", &RunConfig::test_path));
    k.push_back(path_key("checkpoint", "checkpoint output path", &RunConfig::checkpoint_path));
    k.push_back(path_key("log", "training log output path", &RunConfig::log_path));
    k.push_back(path_key("report", "evaluation report path", &RunConfig::report_path));
    return k;
  }();
  return keys;
}

const std::vector<ConfigKey<SynthConfig>>& synth_config_keys() {
  static const std::vector<ConfigKey<SynthConfig>> keys = [] {
    std::vector<ConfigKey<SynthConfig>> k;
    k.push_back(number_key<SynthConfig>("train-videos", "number of training videos", &SynthConfig::train_videos));
    k.push_back(number_key<SynthConfig>("test-videos", "number of test videos", &SynthConfig::test_videos));
    k.push_back(number_key<SynthConfig>("shots", "shots per video T", &SynthConfig::shots));
    k.push_back(number_key<SynthConfig>("visual-dim", "visual feature dimension", &SynthConfig::visual_dim));
    k.push_back(number_key<SynthConfig>("audio-dim", "audio feature dimension", &SynthConfig::audio_dim));
    k.push_back(number_key<SynthConfig>("segments", "highlight segments per video", &SynthConfig::segments));
    k.push_back(number_key<SynthConfig>("segment-min", "shortest segment", &SynthConfig::segment_min));
    k.push_back(number_key<SynthConfig>("segment-max", "longest segment", &SynthConfig::segment_max));
    k.push_back(number_key<SynthConfig>("snr-visual", "visual class-mean separation", &SynthConfig::snr_visual));
    k.push_back(number_key<SynthConfig>("snr-audio", "audio class-mean separation", &SynthConfig::snr_audio));
    k.push_back(number_key<SynthConfig>("flip-rate", "symmetric label flip probability in [0, 0.5)", &SynthConfig::flip_rate));
    k.push_back(number_key<SynthConfig>("dilation", "shots added on each side of every positive segment", &SynthConfig::dilation));
    k.push_back(number_key<SynthConfig>("seed", "generator seed", &SynthConfig::seed));
    return k;
  }();
  return keys;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_key(run_config_keys(), key).set(cfg, value);
}

void apply_setting(SynthConfig& cfg, const std::string& key, const std::string& value) {
  find_key(synth_config_keys(), key).set(cfg, value);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  auto in = open_config(path);
  RunConfig cfg;
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  auto in = open_config(path);
  SynthConfig cfg;
  for (const auto& [k, v] : parse_key_values(in)) apply_setting(cfg, k, v);
  return cfg;
}

std::string canonical_text(const RunConfig& cfg) { return canonical(run_config_keys(), cfg); }
std::string canonical_text(const SynthConfig& cfg) { return canonical(synth_config_keys(), cfg); }

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) {
  return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fingerprint(const RunConfig& cfg) { return hex64(fnv1a64(canonical_text(cfg))); }
std::string fingerprint(const SynthConfig& cfg) { return hex64(fnv1a64(canonical_text(cfg))); }

const std::vector<std::string>& ablation_presets() {
  static const std::vector<std::string> presets = {
      "baseline", "mmsc", "mmsc-cp", "mmsc-cp-cl", "full", "no-mmsc", "no-cp", "no-cl", "no-pp"};
  return presets;
}

void apply_ablation(RunConfig& cfg, const std::string& preset) {
  bool mmsc = true, cp = true, cl = true, pp = true;
  if (preset == "baseline") {
    mmsc = cp = cl = pp = false;
  } else if (preset == "mmsc") {
    cp = cl = pp = false;
  } else if (preset == "mmsc-cp") {
    cl = pp = false;
  } else if (preset == "mmsc-cp-cl") {
    pp = false;
  } else if (preset == "full") {
  } else if (preset == "no-mmsc") {
    mmsc = false;
  } else if (preset == "no-cp") {
    cp = false;
  } else if (preset == "no-cl") {
    cl = false;
  } else if (preset == "no-pp") {
    pp = false;
  } else {
    throw ConfigError("unknown ablation preset '" + preset + "'");
  }
  if (!mmsc) cfg.train.tau = 1.0;
  if (!cp) cfg.train.cross_propagation = false;
  if (!cl) cfg.train.beta = 0.0;
  if (!pp) cfg.median_k = 0;
}

// Checkpoints.

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (bytes.size() - pos < n) throw FormatError(std::string("truncated checkpoint reading ") + what, pos);
  }
  std::uint64_t uint(int width, const char* what) {
    need(static_cast<std::size_t>(width), what);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    pos += static_cast<std::size_t>(width);
    return v;
  }
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  validate_shapes(ckpt.model.params, ckpt.model.dims);
  std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
  put_u64(out, ckpt.fingerprint);
  const ModelDims& d = ckpt.model.dims;
  for (std::size_t v : {d.visual_dim, d.audio_dim, d.model_dim, d.hidden}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u32(out, (ckpt.acp.cross_propagation ? 1U : 0U) | (ckpt.acp.normalize_gate ? 2U : 0U));
  put_u32(out, static_cast<std::uint32_t>(ckpt.window));
  const auto flat = flatten(ckpt.model.params);
  put_u32(out, static_cast<std::uint32_t>(flat.size()));
  for (const auto& p : flat) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    put_u32(out, static_cast<std::uint32_t>(p.value.rows()));
    put_u32(out, static_cast<std::uint32_t>(p.value.cols()));
    for (double v : p.value.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Cursor in{bytes};
  in.need(4, "magic");
  if (!std::equal(std::begin(kCheckpointMagic), std::end(kCheckpointMagic), bytes.begin(),
                  [](char c, std::uint8_t b) { return static_cast<std::uint8_t>(c) == b; })) {
    throw FormatError("checkpoint magic mismatch", 0);
  }
  in.pos = 4;
  Checkpoint ckpt;
  ckpt.fingerprint = in.uint(8, "fingerprint");
  ModelDims& d = ckpt.model.dims;
  d.visual_dim = in.uint(4, "d_v");
  d.audio_dim = in.uint(4, "d_a");
  d.model_dim = in.uint(4, "d");
  d.hidden = in.uint(4, "H");
  const std::uint64_t flags = in.uint(4, "flags");
  ckpt.acp.cross_propagation = (flags & 1U) != 0;
  ckpt.acp.normalize_gate = (flags & 2U) != 0;
  ckpt.window = in.uint(4, "window");
  const std::uint64_t count = in.uint(4, "parameter count");
  std::vector<ad::NamedTensor> flat;
  for (std::uint64_t i = 0; i < count; ++i) {
    ad::NamedTensor p;
    const std::size_t len = in.uint(4, "name length");
    in.need(len, "name");
    p.name.assign(bytes.begin() + static_cast<std::ptrdiff_t>(in.pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(in.pos + len));
    in.pos += len;
    const std::size_t rows = in.uint(4, "rows");
    const std::size_t cols = in.uint(4, "cols");
    in.need(rows * cols * 8, "values");
    p.value = Tensor(rows, cols);
    for (double& v : p.value.data()) v = std::bit_cast<double>(in.uint(8, "values"));
    flat.push_back(std::move(p));
  }
  if (in.pos != bytes.size()) throw FormatError("trailing bytes in checkpoint", in.pos);
  try {
    ckpt.model.params = unflatten(flat, d);
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("checkpoint layout: ") + e.what(), in.pos);
  }
  return ckpt;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace clc
