// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>

#include "json.hpp"

#include "clc/cleaner.h"

namespace clc {

void validate(const TrainConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau <= 1.0)) throw ContractViolation("tau must lie in (0, 1]");
  if (!(cfg.beta >= 0.0)) throw ContractViolation("beta must be non-negative");
  if (cfg.window == 0) throw ContractViolation("window must be at least 1");
  if (cfg.model_dim == 0 || cfg.hidden == 0) {
    throw ContractViolation("model_dim and hidden must be positive");
  }
  if (!(cfg.learning_rate > 0.0)) throw ContractViolation("learning_rate must be positive");
  if (!(cfg.clip_norm >= 0.0)) throw ContractViolation("clip_norm must be non-negative");
}

std::vector<Window> make_windows(std::span<const FeatureSequence> videos, std::size_t window) {
  if (window == 0) throw ContractViolation("make_windows: window must be positive");
  std::vector<Window> out;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const std::size_t t = videos[v].length();
    for (std::size_t start = 0; start < t; start += window) {
      out.push_back({v, start, std::min(window, t - start)});
    }
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t windows, std::mt19937_64& rng) {
  std::vector<std::size_t> order(windows);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

ModelDims dims_for(std::span<const FeatureSequence> videos, const TrainConfig& cfg) {
  if (videos.empty()) throw ContractViolation("dataset is empty");
  ModelDims dims{videos[0].visual.cols(), videos[0].audio.cols(), cfg.model_dim, cfg.hidden};
  for (const FeatureSequence& seq : videos) {
    if (seq.visual.cols() != dims.visual_dim || seq.audio.cols() != dims.audio_dim) {
      throw ContractViolation("video '" + seq.id + "' has feature dimensions " +
                              std::to_string(seq.visual.cols()) + "/" +
                              std::to_string(seq.audio.cols()) + ", expected " +
                              std::to_string(dims.visual_dim) + "/" +
                              std::to_string(dims.audio_dim));
    }
  }
  return dims;
}

WindowObjective build_objective(const ModelWeights<ad::Var>& w, ad::Var visual, ad::Var audio,
                                std::span<const std::uint8_t> labels, const TrainConfig& cfg,
                                const std::vector<std::size_t>* selection_override) {
  WindowObjective obj;
  obj.branches = branches_forward(visual, audio, w, cfg.acp_options(), cfg.unimodal_updates_acp);
  const BranchOutputs& br = obj.branches;
  const Reduction red = cfg.reduction();
  obj.visual_loss = uni_modal_loss(br.y_v, labels, red);
  obj.audio_loss = uni_modal_loss(br.y_a, labels, red);

  BatchSelection& sel = obj.selection;
  if (selection_override != nullptr) {
    sel.visual = sel.audio = sel.merged = *selection_override;
    sel.overlap = sel.merged.size();
  } else {
    sel.visual = select_clean(per_sample_ce(br.y_v.value(), labels), cfg.tau);
    sel.audio = select_clean(per_sample_ce(br.y_a.value(), labels), cfg.tau);
    sel.merged = union_selection(sel.visual, sel.audio);
    sel.overlap = sel.visual.size() + sel.audio.size() - sel.merged.size();
  }

  obj.mm_ce = mm_ce_loss(br.y_mm, labels, sel.merged, red);
  obj.mm_cons = consistency_loss(br.y_mm, br.y_v, br.y_a, sel.merged, red,
                                 cfg.detach_consistency_targets);
  obj.mm_total = total_mm_loss(obj.mm_ce, obj.mm_cons, cfg.beta);
  obj.total = ad::add(ad::add(obj.mm_total, obj.visual_loss), obj.audio_loss);
  return obj;
}

namespace {

void clip_gradients(ModelParams& grads, double max_norm) {
  double sq = 0.0;
  visit_weights(
      [&](const std::string&, const Tensor& g) {
        for (double v : g.data()) sq += v * v;
      },
      grads);
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double factor = max_norm / norm;
  visit_weights(
      [&](const std::string&, Tensor& g) {
        for (double& v : g.data()) v *= factor;
      },
      grads);
}

}  // namespace

StepResult train_step(Model& model, const FeatureSequence& video, const Window& window,
                      const TrainConfig& cfg) {
  if (!video.labels) throw ContractViolation("train_step: video '" + video.id + "' has no labels");
  if (window.length == 0 || window.start + window.length > video.length()) {
    throw ContractViolation("train_step: window outside video '" + video.id + "'");
  }
  ad::Tape tape;
  const ModelWeights<ad::Var> w = bind(tape, model.params, true);
  ad::Var v = tape.constant(slice_rows(video.visual, window.start, window.length));
  ad::Var a = tape.constant(slice_rows(video.audio, window.start, window.length));
  const std::span<const std::uint8_t> labels =
      std::span(*video.labels).subspan(window.start, window.length);

  WindowObjective obj = build_objective(w, v, a, labels, cfg);
  tape.backward(obj.total);

  ModelParams grads = gradients(w);
  if (cfg.clip_norm > 0.0) clip_gradients(grads, cfg.clip_norm);
  visit_weights([&](const std::string&, Tensor& p, const Tensor& g) { p.axpy(-cfg.learning_rate, g); },
                model.params, grads);

  StepResult result;
  result.losses.visual = obj.visual_loss.value()[0];
  result.losses.audio = obj.audio_loss.value()[0];
  result.losses.mm_ce = obj.mm_ce.value()[0];
  result.losses.mm_cons = obj.mm_cons.value()[0];
  result.losses.mm_total = obj.mm_total.value()[0];
  result.losses.beta = cfg.beta;
  result.selection = std::move(obj.selection);
  return result;
}

TrainResult train(std::span<const FeatureSequence> train_set, const TrainConfig& cfg,
                  const Validator& validator) {
  validate(cfg);
  const ModelDims dims = dims_for(train_set, cfg);
  for (const FeatureSequence& seq : train_set) {
    if (!seq.labels) throw ContractViolation("train: video '" + seq.id + "' has no labels");
  }
  TrainResult result{Model{dims, init_params(dims, cfg.seed)}, {}};
  const std::vector<Window> windows = make_windows(train_set, cfg.window);
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eed));

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    record.losses = LossBundle{0, 0, 0, 0, 0, cfg.beta};
    const std::vector<std::size_t> order = epoch_order(windows.size(), rng);
    for (std::size_t it = 0; it < order.size(); ++it) {
      const Window& win = windows[order[it]];
      StepResult step;
      try {
        step = train_step(result.model, train_set[win.video], win, cfg);
      } catch (const NumericError& e) {
        throw NumericError(e.op(), "epoch " + std::to_string(epoch) + ", iteration " +
                                       std::to_string(it + 1) + " (video '" +
                                       train_set[win.video].id + "', shot " +
                                       std::to_string(win.start) + "): " + e.what());
      }
      record.losses.visual += step.losses.visual;
      record.losses.audio += step.losses.audio;
      record.losses.mm_ce += step.losses.mm_ce;
      record.losses.mm_cons += step.losses.mm_cons;
      record.losses.mm_total += step.losses.mm_total;
      record.windows += 1;
      record.shots += win.length;
      record.selected += step.selection.merged.size();
      record.overlap += step.selection.overlap;
      result.log.steps.push_back(step.losses);
    }
    if (validator) record.validation_map = validator(result.model);
    result.log.epochs.push_back(record);
  }
  return result;
}

void write_train_log(const TrainLog& log, const std::string& fingerprint, std::ostream& out) {
  nlohmann::ordered_json header;
  header["format"] = "clc-train-log";
  header["version"] = 1;
  header["fingerprint"] = fingerprint;
  out << header.dump() << '\n';
  for (const EpochRecord& r : log.epochs) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["loss_visual"] = r.losses.visual;
    j["loss_audio"] = r.losses.audio;
    j["loss_mm_ce"] = r.losses.mm_ce;
    j["loss_mm_cons"] = r.losses.mm_cons;
    j["loss_mm"] = r.losses.mm_total;
    j["beta"] = r.losses.beta;
    j["windows"] = r.windows;
    j["shots"] = r.shots;
    j["selected"] = r.selected;
    j["overlap"] = r.overlap;
    if (r.validation_map) j["val_map"] = *r.validation_map;
    out << j.dump() << '\n';
  }
}

}  // namespace clc
