// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Drives the clc binary end to end through a shell.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "clc/config.h"
#include "clc/datasets.h"
#include "clc/labelgen.h"
#include "fixtures.h"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "clc_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(CLC_BINARY) + " " + args + " >" + (kWork / "stdout.txt").string() +
                          " 2>" + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string path(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("frobnicate"), 1);
  EXPECT_EQ(run("train --no-such-flag 1"), 1);
  EXPECT_EQ(run("train --ablate turbo"), 1);
  {
    std::ofstream cfg(path("bad.cfg"));
    cfg << "tau = 0.5\nmystery = 3\n";
  }
  EXPECT_EQ(run("train --config " + path("bad.cfg")), 1);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("mystery"), std::string::npos);
  EXPECT_EQ(run("train --tau 0.5"), 1);  // no training data configured
  EXPECT_EQ(run("train --tau 1.5 --train x.clcf"), 1);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
  EXPECT_EQ(run("eval --checkpoint " + path("missing.ckpt") + " --data " + path("missing.clcf")), 2);
  {
    std::ofstream junk(path("junk.clcf"));
    junk << "not a feature file";
  }
  EXPECT_EQ(run("train --tau 0.5 --train " + path("junk.clcf")), 2);
}

TEST_F(Cli, SynthSweepWritesOneDatasetPerRate) {
  ASSERT_EQ(run("synth --rho-sweep --out " + path("sweep") +
                " --train-videos 1 --test-videos 1 --shots 80 --segments 2 --segment-min 5"
                " --segment-max 20"),
            0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(kWork / "sweep")) files += e.path().extension() == ".clcf";
  EXPECT_GE(files, 3u);
  for (const char* rho : {"0", "0.2", "0.4"}) {
    EXPECT_TRUE(fs::exists(kWork / "sweep" / (std::string("train_rho") + rho + ".clcf"))) << rho;
  }
}

TEST_F(Cli, GradcheckPassesAndDetectsCorruption) {
  EXPECT_EQ(run("gradcheck --T 4 --d 4 --hidden 3 --dv 5 --da 6"), 0);
  EXPECT_NE(slurp(kWork / "stdout.txt").find("PASS"), std::string::npos);
  EXPECT_EQ(run("gradcheck --T 4 --d 4 --hidden 3 --dv 5 --da 6 --break"), 2);
  EXPECT_NE(slurp(kWork / "stdout.txt").find("FAIL"), std::string::npos);
}

TEST_F(Cli, TrainAndEvalAreReproducible) {
  const std::string synth = "synth --out " + path("data") +
                            " --train-videos 2 --test-videos 2 --shots 120 --segments 2"
                            " --segment-min 10 --segment-max 30 --flip-rate 0.2 --seed 3";
  ASSERT_EQ(run(synth), 0);
  const std::string train_set = slurp(kWork / "data" / "train.clcf");
  ASSERT_EQ(run(synth), 0);
  EXPECT_EQ(slurp(kWork / "data" / "train.clcf"), train_set);

  for (const char* tag : {"a", "b"}) {
    const std::string t(tag);
    ASSERT_EQ(run("train --tau 0.7 --model-dim 6 --hidden 4 --epochs 2 --window 50 --lr 0.001"
                  " --train " + path("data/train.clcf") + " --checkpoint " + path(t + ".ckpt") +
                  " --log " + path(t + ".jsonl")),
              0);
    ASSERT_EQ(run("eval --checkpoint " + path(t + ".ckpt") + " --data " + path("data/test.clcf") +
                  " --report " + path(t + ".tsv") + " --curves " + path(t + "_curves")),
              0);
  }
  EXPECT_EQ(slurp(kWork / "a.jsonl"), slurp(kWork / "b.jsonl"));
  EXPECT_EQ(slurp(kWork / "a.ckpt"), slurp(kWork / "b.ckpt"));
  EXPECT_EQ(slurp(kWork / "a.tsv"), slurp(kWork / "b.tsv"));
  EXPECT_TRUE(fs::exists(kWork / "a_curves" / "test_2.tsv"));

  const std::string log = slurp(kWork / "a.jsonl");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  const std::string report = slurp(kWork / "a.tsv");
  EXPECT_EQ(report.rfind("# clc-eval fingerprint=", 0), 0u);
  EXPECT_NE(report.find("\nmAP\t"), std::string::npos);

  // The seed override changes the run.
  ASSERT_EQ(run("train --tau 0.7 --model-dim 6 --hidden 4 --epochs 2 --window 50 --lr 0.001"
                " --seed 8 --train " + path("data/train.clcf") + " --checkpoint " + path("c.ckpt") +
                " --log " + path("c.jsonl")),
            0);
  EXPECT_NE(slurp(kWork / "c.ckpt"), slurp(kWork / "a.ckpt"));
}

TEST_F(Cli, MakeLabelsFromFixture) {
  const auto f = fixture::label_fixture();
  auto as_features = [](const std::string& id, const clc::Tensor& x) {
    clc::FeatureSequence s;
    s.id = id;
    s.visual = x;
    clc::round_to_float(s.visual);
    s.audio = clc::Tensor(x.rows(), 1);
    return std::vector<clc::FeatureSequence>{s};
  };
  clc::write_features(as_features("trailer", f.trailer), path("trailer.clcf"));
  clc::write_features(as_features("movie", f.movie), path("movie.clcf"));
  {
    std::ofstream out(path("shots.txt"));
    clc::write_shot_table(f.shots, out);
  }
  ASSERT_EQ(run("make-labels --trailer " + path("trailer.clcf") + " --movie " + path("movie.clcf") +
                " --shots " + path("shots.txt") + " --theta 0.9 --out " + path("labels.txt")),
            0);
  std::ifstream in(path("labels.txt"));
  const clc::LabelTrack track = clc::read_label_track(in);
  ASSERT_EQ(track.labels.size(), f.shots.size());
  EXPECT_NEAR(track.positive_proportion(), f.expected_proportion, 1e-12);

  // A theta nothing can reach still succeeds, with an all-zero track.
  ASSERT_EQ(run("make-labels --trailer " + path("trailer.clcf") + " --movie " + path("movie.clcf") +
                " --shots " + path("shots.txt") + " --theta 1.5 --out " + path("none.txt")),
            0);
  EXPECT_NE(slurp(kWork / "stderr.txt").find("warning"), std::string::npos);
  EXPECT_NE(run("make-labels --trailer " + path("trailer.clcf") + " --movie " + path("movie.clcf") +
                " --shots " + path("no-shots.txt") + " --out " + path("x.txt")),
            0);
  std::ifstream none(path("none.txt"));
  EXPECT_EQ(clc::read_label_track(none).positive_proportion(), 0.0);
}

TEST_F(Cli, AblateWritesGrid) {
  const std::string synth = "synth --out " + path("abl") +
                            " --train-videos 1 --test-videos 1 --shots 80 --segments 2"
                            " --segment-min 5 --segment-max 20 --seed 2";
  ASSERT_EQ(run(synth), 0);
  ASSERT_EQ(run("ablate --presets baseline full --seeds 2 --tau 0.7 --model-dim 4 --hidden 3"
                " --epochs 1 --window 40 --lr 0.001 --train " + path("abl/train.clcf") + " --test " +
                path("abl/test.clcf") + " --out " + path("abl.tsv")),
            0);
  const std::string tsv = slurp(kWork / "abl.tsv");
  EXPECT_NE(tsv.find("baseline\tmean\t"), std::string::npos);
  EXPECT_NE(tsv.find("full\tmean\t"), std::string::npos);
}

}  // namespace
