// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Multi-modality sample cleaning and the training loop.
//
// Every window, each uni-modal branch ranks its shots by cross-entropy and
// nominates the ceil(tau * N) smallest as clean. The multi-modal branch is
// trained only on the union of both nominations, while the uni-modal
// branches keep training on every shot.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "clc/acp.h"
#include "clc/branches.h"
#include "clc/datasets.h"
#include "clc/model.h"

namespace clc {

/// Indices of the ceil(tau * N) smallest losses, ties broken by lower index,
/// returned in ascending index order.
std::vector<std::size_t> select_clean(std::span<const double> losses, double tau);

/// Number of samples select_clean keeps for a batch of n.
std::size_t clean_count(std::size_t n, double tau);

/// Sorted union of two index sets.
std::vector<std::size_t> union_selection(std::span<const std::size_t> a,
                                         std::span<const std::size_t> b);

struct BatchSelection {
  std::vector<std::size_t> visual;
  std::vector<std::size_t> audio;
  std::vector<std::size_t> merged;
  std::size_t overlap = 0;
};

struct TrainConfig {
  std::size_t model_dim = 512;
  std::size_t hidden = 128;
  double tau = 0.65;
  double beta = 0.1;
  std::size_t epochs = 50;
  double learning_rate = 0.01;
  std::size_t window = 128;
  std::uint64_t seed = 0;
  bool cross_propagation = true;
  bool normalize_gate = false;
  /// Route uni-modal losses into the shared cross-propagation parameters.
  bool unimodal_updates_acp = false;
  bool mean_reduction = false;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 0.0;
  /// Treat uni-modal predictions as constants inside the consistency loss.
  bool detach_consistency_targets = true;

  AcpOptions acp_options() const { return {cross_propagation, normalize_gate}; }
  Reduction reduction() const { return mean_reduction ? Reduction::kMean : Reduction::kSum; }
};

/// Throws ContractViolation for out-of-range fields.
void validate(const TrainConfig& cfg);

/// One batch: `length` consecutive shots of video `video` from `start`.
struct Window {
  std::size_t video = 0;
  std::size_t start = 0;
  std::size_t length = 0;
};

/// Non-overlapping windows covering every video; the tail may be shorter.
std::vector<Window> make_windows(std::span<const FeatureSequence> videos, std::size_t window);

/// Tape-level objective for one window.
struct WindowObjective {
  BranchOutputs branches;
  BatchSelection selection;
  ad::Var visual_loss;
  ad::Var audio_loss;
  ad::Var mm_ce;
  ad::Var mm_cons;
  ad::Var mm_total;
  /// mm_total + visual_loss + audio_loss. Gradient routing is encoded in the
  /// graph (detached inputs), so one backward pass serves every branch.
  ad::Var total;
};

/// Builds the objective. When `selection_override` is set it replaces the
/// small-loss selection for the multi-modal terms.
WindowObjective build_objective(const ModelWeights<ad::Var>& w, ad::Var visual, ad::Var audio,
                                std::span<const std::uint8_t> labels, const TrainConfig& cfg,
                                const std::vector<std::size_t>* selection_override = nullptr);

struct StepResult {
  LossBundle losses;
  BatchSelection selection;
};

/// Forward, select, backward and one SGD update of `model` on `window`.
StepResult train_step(Model& model, const FeatureSequence& video, const Window& window,
                      const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  LossBundle losses;  // summed over the epoch's windows
  std::size_t windows = 0;
  std::size_t shots = 0;
  std::size_t selected = 0;  // total |N'| over the epoch
  std::size_t overlap = 0;   // total |Nv ∩ Na|
  std::optional<double> validation_map;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<LossBundle> steps;
};

struct TrainResult {
  Model model;
  TrainLog log;
};

/// Optional per-epoch validation hook; returns the validation mAP.
using Validator = std::function<double(const Model&)>;

/// Runs cfg.epochs passes over seeded-shuffled windows of `train_set`.
TrainResult train(std::span<const FeatureSequence> train_set, const TrainConfig& cfg,
                  const Validator& validator = {});

/// Window visiting order for one epoch, drawn from `rng`.
std::vector<std::size_t> epoch_order(std::size_t windows, std::mt19937_64& rng);

/// Dimensions implied by a dataset and a config.
ModelDims dims_for(std::span<const FeatureSequence> videos, const TrainConfig& cfg);

/// One JSON object per line: a header with the fingerprint, then one record
/// per epoch.
void write_train_log(const TrainLog& log, const std::string& fingerprint, std::ostream& out);

}  // namespace clc
