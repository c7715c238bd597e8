// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "clc/config.h"

namespace clc {
namespace {

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  std::istringstream in("# run\n tau = 0.6  # cleaning\n\nbeta=0.2\n");
  const auto kv = parse_key_values(in);
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"tau", "0.6"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"beta", "0.2"}));
}

TEST(KeyValues, RejectsMalformedAndDuplicates) {
  std::istringstream no_eq("tau 0.6\n");
  EXPECT_THROW(parse_key_values(no_eq), ConfigError);
  std::istringstream dup("tau=0.6\ntau=0.7\n");
  EXPECT_THROW(parse_key_values(dup), ConfigError);
  std::istringstream empty_key("=1\n");
  EXPECT_THROW(parse_key_values(empty_key), ConfigError);
}

TEST(Settings, ApplyKnownKeys) {
  RunConfig cfg;
  apply_setting(cfg, "tau", "0.5");
  apply_setting(cfg, "cross-propagation", "off");
  apply_setting(cfg, "epochs", "7");
  apply_setting(cfg, "k", "3");
  apply_setting(cfg, "train", "data/train.clcf");
  EXPECT_EQ(cfg.train.tau, 0.5);
  EXPECT_TRUE(cfg.tau_set);
  EXPECT_FALSE(cfg.train.cross_propagation);
  EXPECT_EQ(cfg.train.epochs, 7u);
  EXPECT_EQ(cfg.median_k, 3u);
  EXPECT_EQ(cfg.train_path, "data/train.clcf");
}

TEST(Settings, RejectUnknownKeysAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "gamma", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "tau", "abc"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "epochs", "-3"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "epochs", "2.5"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "normalize-gate", "maybe"), ConfigError);
  SynthConfig s;
  EXPECT_THROW(apply_setting(s, "tau", "0.5"), ConfigError);
  apply_setting(s, "flip-rate", "0.3");
  EXPECT_EQ(s.flip_rate, 0.3);
}

TEST(Fingerprint, StableAndSensitive) {
  RunConfig a;
  RunConfig b;
  EXPECT_EQ(fingerprint(a), fingerprint(b));
  EXPECT_EQ(fingerprint(a).size(), 16u);
  b.train.beta = 0.2;
  EXPECT_NE(fingerprint(a), fingerprint(b));
  // Paths do not affect the fingerprint.
  b = a;
  b.train_path = "/elsewhere/train.clcf";
  b.log_path = "x.jsonl";
  EXPECT_EQ(fingerprint(a), fingerprint(b));
}

TEST(Fingerprint, CanonicalTextIsSorted) {
  const std::string text = canonical_text(RunConfig{});
  std::istringstream in(text);
  std::string line, previous;
  while (std::getline(in, line)) {
    EXPECT_LT(previous, line);
    EXPECT_EQ(line.find("train="), std::string::npos);
    previous = line;
  }
}

TEST(Fnv, KnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(LoadConfig, FromFile) {
  const auto dir = std::filesystem::temp_directory_path() / "clc_test_config";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "run.cfg");
    out << "tau = 0.6\nwindow = 64\n";
  }
  const RunConfig cfg = load_run_config(dir / "run.cfg");
  EXPECT_EQ(cfg.train.tau, 0.6);
  EXPECT_EQ(cfg.train.window, 64u);
  {
    std::ofstream out(dir / "bad.cfg");
    out << "tau = 0.6\nfoo = 1\n";
  }
  EXPECT_THROW(load_run_config(dir / "bad.cfg"), ConfigError);
  EXPECT_THROW(load_run_config(dir / "missing.cfg"), ConfigError);
}

TEST(Ablation, PresetsDisableComponents) {
  RunConfig base;
  base.train.tau = 0.6;
  base.train.beta = 0.1;
  base.median_k = 9;
  auto with = [&](const std::string& p) {
    RunConfig c = base;
    apply_ablation(c, p);
    return c;
  };
  const RunConfig baseline = with("baseline");
  EXPECT_EQ(baseline.train.tau, 1.0);
  EXPECT_FALSE(baseline.train.cross_propagation);
  EXPECT_EQ(baseline.train.beta, 0.0);
  EXPECT_EQ(baseline.median_k, 0u);
  const RunConfig mmsc_cp = with("mmsc-cp");
  EXPECT_EQ(mmsc_cp.train.tau, 0.6);
  EXPECT_TRUE(mmsc_cp.train.cross_propagation);
  EXPECT_EQ(mmsc_cp.train.beta, 0.0);
  EXPECT_EQ(mmsc_cp.median_k, 0u);
  const RunConfig full = with("full");
  EXPECT_EQ(canonical_text(full), canonical_text(base));
  EXPECT_EQ(with("no-pp").median_k, 0u);
  EXPECT_EQ(with("no-pp").train.beta, 0.1);
  EXPECT_THROW(with("turbo"), ConfigError);
  for (const std::string& p : ablation_presets()) EXPECT_NO_THROW(with(p));
}

Checkpoint sample_checkpoint(bool projection) {
  Checkpoint c;
  c.model.dims = {projection ? 5u : 4u, 3, 4, 2};
  c.model.params = init_params(c.model.dims, 12);
  c.fingerprint = 0x0123456789abcdefULL;
  c.acp = {true, true};
  c.window = 64;
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (bool projection : {false, true}) {
    const Checkpoint c = sample_checkpoint(projection);
    const auto bytes = encode_checkpoint(c);
    const Checkpoint back = decode_checkpoint(bytes);
    EXPECT_EQ(back.model.dims, c.model.dims);
    EXPECT_EQ(back.fingerprint, c.fingerprint);
    EXPECT_EQ(back.acp.cross_propagation, c.acp.cross_propagation);
    EXPECT_EQ(back.acp.normalize_gate, c.acp.normalize_gate);
    EXPECT_EQ(back.window, c.window);
    visit_weights([](const std::string& n, const Tensor& a, const Tensor& b) { EXPECT_EQ(a, b) << n; },
                  back.model.params, c.model.params);
    EXPECT_EQ(encode_checkpoint(back), bytes);
  }
}

TEST(Checkpoint, HeaderLayout) {
  const auto bytes = encode_checkpoint(sample_checkpoint(false));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "CLC1");
  EXPECT_EQ(bytes[4], 0xef);   // fingerprint, little-endian
  EXPECT_EQ(bytes[11], 0x01);
  EXPECT_EQ(bytes[12], 4);     // d_v
  EXPECT_EQ(bytes[28], 3);     // flags: both bits
  EXPECT_EQ(bytes[32], 64);    // window
}

TEST(Checkpoint, CorruptionIsDetected) {
  const auto bytes = encode_checkpoint(sample_checkpoint(true));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(7);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
  auto wrong_dim = bytes;
  wrong_dim[20] = 9;  // model dimension no longer matches the tensors
  EXPECT_THROW(decode_checkpoint(wrong_dim), FormatError);
}

TEST(Checkpoint, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "clc_test_config";
  std::filesystem::create_directories(dir);
  const Checkpoint c = sample_checkpoint(true);
  save_checkpoint(c, dir / "m.ckpt");
  EXPECT_EQ(read_file(dir / "m.ckpt"), encode_checkpoint(c));
  EXPECT_EQ(encode_checkpoint(load_checkpoint(dir / "m.ckpt")), encode_checkpoint(c));
}

}  // namespace
}  // namespace clc
