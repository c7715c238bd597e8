// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// clc: command-line driver.
//
//   clc synth        generate a synthetic benchmark
//   clc make-labels  trailer-matched, scene-expanded label tracks
//   clc train        train and write a checkpoint + JSON-lines log
//   clc eval         score a dataset, write the mAP report
//   clc gradcheck    finite-difference check of the training objective
//   clc ablate       train/eval grid over ablation presets and seeds
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime or numeric error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clc/cleaner.h"
#include "clc/config.h"
#include "clc/datasets.h"
#include "clc/evaluation.h"
#include "clc/gradcheck.h"
#include "clc/labelgen.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

// Flags mirroring every key of a config table; values are applied after the
// config file so that flags win.
template <class Cfg>
struct KeyFlags {
  std::map<std::string, std::string> values;

  void attach(CLI::App* app, const std::vector<clc::ConfigKey<Cfg>>& keys) {
    const Cfg defaults{};
    for (const auto& key : keys) {
      std::string help = key.help;
      const std::string def = key.get(defaults);
      if (!def.empty()) help += " [config default: " + def + "]";
      app->add_option("--" + key.name, values[key.name], help);
    }
  }

  void apply(CLI::App* app, Cfg& cfg) const {
    for (const auto& [name, value] : values) {
      if (app->count("--" + name) > 0) clc::apply_setting(cfg, name, value);
    }
  }
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("CLC_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == std::string(s).size()) return v;
  } catch (const std::exception&) {
  }
  throw clc::ConfigError(std::string("CLC_SEED is not an unsigned integer: '") + s + "'");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw clc::IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string config;
  std::string out = ".";
  bool rho_sweep = false;
  KeyFlags<clc::SynthConfig> flags;
};

void write_synth(const clc::SynthConfig& cfg, const fs::path& dir, const std::string& suffix) {
  const clc::SynthDataset data = clc::synth_generate(cfg);
  fs::create_directories(dir);
  const fs::path train = dir / ("train" + suffix + ".clcf");
  const fs::path test = dir / ("test" + suffix + ".clcf");
  clc::write_features(data.train, train);
  clc::write_features(data.test, test);
  std::cout << "synth fingerprint=" << clc::fingerprint(cfg) << " flip-rate=" << cfg.flip_rate
            << " -> " << train.string() << ", " << test.string() << '\n';
}

int run_synth(CLI::App* app, const SynthArgs& args) {
  clc::SynthConfig cfg;
  if (!args.config.empty()) cfg = clc::load_synth_config(args.config);
  if (const auto seed = env_seed()) cfg.seed = *seed;
  args.flags.apply(app, cfg);
  if (!args.rho_sweep) {
    clc::validate(cfg);
    write_synth(cfg, args.out, "");
    return 0;
  }
  for (const char* rho : {"0", "0.2", "0.4"}) {
    clc::SynthConfig swept = cfg;
    clc::apply_setting(swept, "flip-rate", rho);
    clc::validate(swept);
    write_synth(swept, args.out, std::string("_rho") + rho);
  }
  return 0;
}

// ---- make-labels ----------------------------------------------------------

struct LabelArgs {
  std::string trailer;
  std::string movie;
  std::string shots;
  std::optional<double> theta;
  std::string out = "labels.txt";
};

clc::Tensor first_visual(const std::string& path) {
  const auto seqs = clc::load_features(path);
  if (seqs.empty()) throw clc::IoError(path + " contains no videos");
  return seqs.front().visual;
}

int run_make_labels(const LabelArgs& args) {
  double theta = 0.85;
  if (args.theta) {
    theta = *args.theta;
  } else {
    warn("no --theta given; using the fixture default 0.85");
  }
  if (!(theta >= -1.0 && theta <= 1.0 + 1e-9)) warn("theta outside [-1, 1]; nothing can match");
  const clc::ShotTable shots = clc::read_shot_table(fs::path(args.shots));
  const clc::Tensor trailer = first_visual(args.trailer);
  const clc::Tensor movie = first_visual(args.movie);
  const clc::LabelBuildResult r = clc::build_training_labels(trailer, movie, shots, theta);

  const std::string fp = clc::hex64(clc::fnv1a64("theta=" + fmt(theta, "%.17g") + "\n"));
  auto out = open_out(args.out);
  clc::write_label_track(r.track, out, fp);

  std::cout << "matched trailer shots: " << r.matched_trailer_shots << " of " << trailer.rows()
            << "\nmatched movie shots: " << r.matched_movie_shots
            << "\npositive scenes: " << r.positive_scenes
            << "\npositive proportion: " << fmt(r.positive_proportion, "%.6f") << '\n';
  if (r.skipped_trailer + r.skipped_movie > 0) {
    warn("skipped zero-norm rows: " + std::to_string(r.skipped_trailer) + " trailer, " +
         std::to_string(r.skipped_movie) + " movie");
  }
  if (r.matched_trailer_shots == 0) warn("no trailer shot reached the threshold; all labels are 0");
  return 0;
}

// ---- train / eval ---------------------------------------------------------

struct RunArgs {
  std::string config;
  std::string ablate;
  KeyFlags<clc::RunConfig> flags;
};

clc::RunConfig merged_run_config(CLI::App* app, const RunArgs& args) {
  clc::RunConfig cfg;
  if (!args.config.empty()) cfg = clc::load_run_config(args.config);
  if (const auto seed = env_seed()) cfg.train.seed = *seed;
  args.flags.apply(app, cfg);
  if (!args.ablate.empty()) clc::apply_ablation(cfg, args.ablate);
  if (!cfg.tau_set && args.ablate.empty()) warn("tau not set; using the default 0.65");
  clc::validate(cfg.train);
  return cfg;
}

std::uint64_t fingerprint_value(const clc::RunConfig& cfg) {
  return clc::fnv1a64(clc::canonical_text(cfg));
}

clc::Checkpoint train_checkpoint(const clc::RunConfig& cfg, std::ostream& log_out) {
  if (cfg.train_path.empty()) throw clc::ConfigError("no training data: set 'train'");
  const auto train_set = clc::load_features(cfg.train_path);
  std::vector<clc::FeatureSequence> val_set;
  if (!cfg.val_path.empty()) val_set = clc::load_features(cfg.val_path);

  clc::Validator validator;
  if (!val_set.empty()) {
    validator = [&](const clc::Model& m) {
      return clc::evaluate(m, val_set, cfg.median_k, cfg.train.window, cfg.train.acp_options()).map;
    };
  }
  clc::TrainResult result = clc::train(train_set, cfg.train, validator);
  clc::write_train_log(result.log, clc::fingerprint(cfg), log_out);
  return clc::Checkpoint{std::move(result.model), fingerprint_value(cfg), cfg.train.acp_options(),
                         cfg.train.window};
}

int run_train(CLI::App* app, const RunArgs& args) {
  const clc::RunConfig cfg = merged_run_config(app, args);
  std::cout << "config fingerprint=" << clc::fingerprint(cfg) << '\n';
  auto log_out = open_out(cfg.log_path);
  const clc::Checkpoint ckpt = train_checkpoint(cfg, log_out);
  if (fs::path(cfg.checkpoint_path).has_parent_path()) {
    fs::create_directories(fs::path(cfg.checkpoint_path).parent_path());
  }
  clc::save_checkpoint(ckpt, cfg.checkpoint_path);
  std::cout << "checkpoint: " << cfg.checkpoint_path << "\nlog: " << cfg.log_path << '\n';
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::size_t k = 9;
  std::string report = "eval_report.tsv";
  std::string curves;
};

int run_eval(const EvalArgs& args) {
  const auto bytes = clc::read_file(args.checkpoint);
  const clc::Checkpoint ckpt = clc::decode_checkpoint(bytes);
  const auto videos = clc::load_features(args.data);
  std::vector<clc::ScoreCurve> curves;
  clc::EvalReport report = clc::evaluate(ckpt.model, videos, args.k, ckpt.window, ckpt.acp,
                                         args.curves.empty() ? nullptr : &curves);
  report.fingerprint = clc::hex64(ckpt.fingerprint);
  report.checkpoint_hash = clc::hex64(clc::fnv1a64(bytes));
  {
    auto out = open_out(args.report);
    clc::write_report(report, out);
  }
  for (const clc::ScoreCurve& c : curves) {
    auto out = open_out(fs::path(args.curves) / (c.id + ".tsv"));
    clc::write_curve(c, out, report.fingerprint);
  }
  for (const std::string& id : report.excluded) warn("video '" + id + "' has no positives; excluded");
  std::cout << "mAP " << fmt(report.map) << " over " << report.videos.size() << " videos (k=" << args.k
            << ")\nreport: " << args.report << '\n';
  return 0;
}

// ---- gradcheck ------------------------------------------------------------

struct GradArgs {
  clc::GradcheckOptions opts;
  double tolerance = 1e-4;
};

int run_gradcheck(const GradArgs& args) {
  const clc::ad::GradCheckReport r = clc::check_objective_gradients(args.opts);
  std::cout << "max relative error " << fmt(r.max_relative_error, "%.3e") << " at "
            << r.worst_parameter << "[" << r.worst_index << "] (analytic "
            << fmt(r.worst_analytic, "%.10g") << ", numeric " << fmt(r.worst_numeric, "%.10g")
            << ")\n";
  const bool ok = r.max_relative_error <= args.tolerance;
  std::cout << (ok ? "PASS" : "FAIL") << " tolerance " << fmt(args.tolerance, "%.1e") << '\n';
  return ok ? 0 : kRuntimeError;
}

// ---- ablate ---------------------------------------------------------------

struct AblateArgs {
  RunArgs run;
  std::vector<std::string> presets = {"baseline", "mmsc", "mmsc-cp", "mmsc-cp-cl", "full"};
  std::size_t seeds = 5;
  std::string out = "ablation.tsv";
};

int run_ablate(CLI::App* app, const AblateArgs& args) {
  RunArgs base = args.run;
  base.ablate.clear();
  const clc::RunConfig cfg0 = merged_run_config(app, base);
  if (cfg0.test_path.empty()) throw clc::ConfigError("no test data: set 'test'");
  const auto test_set = clc::load_features(cfg0.test_path);

  auto out = open_out(args.out);
  out << "# clc-ablate fingerprint=" << clc::fingerprint(cfg0) << "\npreset\tseed\tmAP\n";
  for (const std::string& preset : args.presets) {
    double total = 0.0;
    for (std::size_t s = 0; s < args.seeds; ++s) {
      clc::RunConfig cfg = cfg0;
      clc::apply_ablation(cfg, preset);
      cfg.train.seed = cfg0.train.seed + s;
      std::ostringstream discard;
      const clc::Checkpoint ckpt = train_checkpoint(cfg, discard);
      const double map =
          clc::evaluate(ckpt.model, test_set, cfg.median_k, cfg.train.window, ckpt.acp).map;
      total += map;
      out << preset << '\t' << cfg.train.seed << '\t' << fmt(map, "%.17g") << '\n';
      std::cout << preset << " seed " << cfg.train.seed << ": mAP " << fmt(map) << '\n';
    }
    const double mean = args.seeds > 0 ? total / static_cast<double>(args.seeds) : 0.0;
    out << preset << "\tmean\t" << fmt(mean, "%.17g") << '\n';
    std::cout << preset << " mean mAP " << fmt(mean) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CLC: noisy-label multi-modal highlight detection"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic benchmark (train/test CLCF)");
  synth_cmd->add_option("--config", synth.config, "key=value synth config file");
  synth_cmd->add_option("--out", synth.out, "output directory");
  synth_cmd->add_flag("--rho-sweep", synth.rho_sweep, "write one dataset per flip rate in {0, 0.2, 0.4}");
  synth.flags.attach(synth_cmd, clc::synth_config_keys());

  LabelArgs labels;
  auto* labels_cmd = app.add_subcommand("make-labels", "scene-aware labels from trailer matches");
  labels_cmd->add_option("--trailer", labels.trailer, "trailer features (CLCF, first video)")->required();
  labels_cmd->add_option("--movie", labels.movie, "movie features (CLCF, first video)")->required();
  labels_cmd->add_option("--shots", labels.shots, "shot table: shot_id start end scene")->required();
  labels_cmd->add_option("--theta", labels.theta, "cosine threshold (fixture default 0.85)");
  labels_cmd->add_option("--out", labels.out, "label track output");

  RunArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--config", train_args.config, "key=value run config file");
  train_cmd->add_option("--ablate", train_args.ablate, "ablation preset")
      ->check(CLI::IsMember(clc::ablation_presets()));
  train_args.flags.attach(train_cmd, clc::run_config_keys());

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_args.data, "labelled features (CLCF)")->required();
  eval_cmd->add_option("--k", eval_args.k, "median filter half-width (default 9)");
  eval_cmd->add_option("--report", eval_args.report, "report output");
  eval_cmd->add_option("--curves", eval_args.curves, "directory for per-video score curves");

  GradArgs grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "check objective gradients by central differences");
  grad_cmd->add_option("--T", grad.opts.shots, "shots");
  grad_cmd->add_option("--d", grad.opts.dims.model_dim, "model dimension");
  grad_cmd->add_option("--hidden", grad.opts.dims.hidden, "recurrent hidden size");
  grad_cmd->add_option("--dv", grad.opts.dims.visual_dim, "visual input dimension");
  grad_cmd->add_option("--da", grad.opts.dims.audio_dim, "audio input dimension");
  grad_cmd->add_option("--seed", grad.opts.seed, "seed");
  grad_cmd->add_option("--step", grad.opts.step, "finite-difference step");
  grad_cmd->add_option("--tolerance", grad.tolerance, "maximum relative error");
  grad_cmd->add_flag("--break", grad.opts.broken, "corrupt one analytic gradient");

  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "train/eval grid over ablation presets");
  ablate_cmd->add_option("--config", ablate.run.config, "key=value run config file");
  ablate_cmd->add_option("--presets", ablate.presets, "presets to run")
      ->check(CLI::IsMember(clc::ablation_presets()));
  ablate_cmd->add_option("--seeds", ablate.seeds, "seeds per preset, counting up from 'seed'");
  ablate_cmd->add_option("--out", ablate.out, "grid output");
  ablate.run.flags.attach(ablate_cmd, clc::run_config_keys());

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth_cmd) return run_synth(synth_cmd, synth);
    if (*labels_cmd) return run_make_labels(labels);
    if (*train_cmd) return run_train(train_cmd, train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*grad_cmd) return run_gradcheck(grad);
    if (*ablate_cmd) return run_ablate(ablate_cmd, ablate);
  } catch (const clc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const clc::ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kUsageError;
  } catch (const clc::NumericError& e) {
    std::cerr << "numeric error in " << e.op() << ": " << e.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
