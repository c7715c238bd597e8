// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/gradcheck.h"

#include <numeric>
#include <random>
#include <vector>

#include "clc/cleaner.h"

namespace clc {

ad::GradCheckReport check_objective_gradients(const GradcheckOptions& opts) {
  const ModelDims& dims = opts.dims;
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor visual(opts.shots, dims.visual_dim);
  Tensor audio(opts.shots, dims.audio_dim);
  for (double& v : visual.data()) v = normal(rng);
  for (double& v : audio.data()) v = normal(rng);
  std::vector<std::uint8_t> labels(opts.shots);
  for (std::size_t i = 0; i < opts.shots; ++i) labels[i] = static_cast<std::uint8_t>((i * 7 + opts.seed) % 3 == 0);

  TrainConfig cfg;
  cfg.model_dim = dims.model_dim;
  cfg.hidden = dims.hidden;
  cfg.beta = opts.beta;
  cfg.cross_propagation = opts.cross_propagation;
  cfg.normalize_gate = opts.normalize_gate;
  cfg.detach_consistency_targets = false;
  cfg.unimodal_updates_acp = true;

  std::vector<std::size_t> everything(opts.shots);
  std::iota(everything.begin(), everything.end(), 0);
  const bool has_visual_in = dims.visual_dim != dims.model_dim;

  const auto params = flatten(init_params(dims, mix_seed(opts.seed, 17)));
  const ad::ScalarFunction f = [&](ad::Tape& tape, std::span<const ad::Var> leaves) {
    const ModelWeights<ad::Var> w = bind_leaves(leaves, has_visual_in);
    return build_objective(w, tape.constant(visual), tape.constant(audio), labels, cfg, &everything)
        .total;
  };
  std::function<void(std::vector<Tensor>&)> corrupt;
  if (opts.broken) {
    corrupt = [](std::vector<Tensor>& grads) { grads.back().data()[0] += 1.0; };
  }
  return ad::grad_check(f, params, opts.step, corrupt);
}

}  // namespace clc
