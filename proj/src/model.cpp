// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

#include "clc/model.h"

#include <cmath>
#include <map>
#include <random>
#include <utility>

namespace clc {
namespace {

struct Shape {
  std::size_t rows;
  std::size_t cols;
};

/// Expected shape and initialization fan-in for every parameter name.
std::map<std::string, std::pair<Shape, std::size_t>> expected_shapes(const ModelDims& dims,
                                                                     bool has_visual_in) {
  const std::size_t d = dims.model_dim;
  const std::size_t h = dims.hidden;
  std::map<std::string, std::pair<Shape, std::size_t>> shapes;
  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    shapes[name + ".weight"] = {{in, out}, in};
    shapes[name + ".bias"] = {{1, out}, in};
  };
  auto head = [&](const std::string& name, std::size_t in) {
    for (const char* dir : {".gru_forward", ".gru_backward"}) {
      shapes[name + dir + ".input"] = {{in, 3 * h}, in};
      shapes[name + dir + ".hidden"] = {{h, 3 * h}, h};
      shapes[name + dir + ".input_bias"] = {{1, 3 * h}, in};
      shapes[name + dir + ".hidden_bias"] = {{1, 3 * h}, h};
    }
    linear(name + ".classifier", 2 * h, 2);
  };
  if (has_visual_in) linear("acp.visual_in", dims.visual_dim, d);
  linear("acp.audio_proj", dims.audio_dim, d);
  for (int i = 1; i <= 6; ++i) {
    shapes["acp.w" + std::to_string(i) + "_v"] = {{d, d}, d};
    shapes["acp.w" + std::to_string(i) + "_a"] = {{d, d}, d};
  }
  linear("acp.fuse_v_in", 3 * d, d);
  linear("acp.fuse_v_out", d, d);
  linear("acp.fuse_a_in", 3 * d, d);
  linear("acp.fuse_a_out", d, d);
  head("mm", 2 * d);
  head("visual", d);
  head("audio", d);
  return shapes;
}

ModelParams empty_layout(const ModelDims& dims) {
  ModelParams params;
  if (dims.visual_dim != dims.model_dim) params.acp.visual_in.emplace();
  return params;
}

}  // namespace

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.visual_dim == 0 || dims.audio_dim == 0 || dims.model_dim == 0 || dims.hidden == 0) {
    throw ContractViolation("init_params: all dimensions must be positive");
  }
  ModelParams params = empty_layout(dims);
  const auto shapes = expected_shapes(dims, params.acp.visual_in.has_value());
  std::mt19937_64 rng(seed);
  visit_weights(
      [&](const std::string& name, Tensor& t) {
        const auto& [shape, fan_in] = shapes.at(name);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        t = Tensor(shape.rows, shape.cols);
        for (double& v : t.data()) v = dist(rng);
      },
      params);
  return params;
}

void validate_shapes(const ModelParams& params, const ModelDims& dims) {
  const bool want_visual_in = dims.visual_dim != dims.model_dim;
  if (params.acp.visual_in.has_value() != want_visual_in) {
    throw ContractViolation("model: visual input projection presence does not match dims");
  }
  const auto shapes = expected_shapes(dims, want_visual_in);
  visit_weights(
      [&](const std::string& name, const Tensor& t) {
        const Shape s = shapes.at(name).first;
        if (t.rows() != s.rows || t.cols() != s.cols) {
          throw ContractViolation("model: parameter " + name + " has shape " + t.shape_string() +
                                  ", expected " + std::to_string(s.rows) + "x" +
                                  std::to_string(s.cols));
        }
      },
      params);
}

std::size_t parameter_count(const ModelParams& params) {
  std::size_t n = 0;
  visit_weights([&](const std::string&, const Tensor& t) { n += t.size(); }, params);
  return n;
}

std::vector<ad::NamedTensor> flatten(const ModelParams& params) {
  std::vector<ad::NamedTensor> flat;
  visit_weights([&](const std::string& name, const Tensor& t) { flat.push_back({name, t}); },
                params);
  return flat;
}

ModelParams unflatten(std::span<const ad::NamedTensor> flat, const ModelDims& dims) {
  ModelParams params = empty_layout(dims);
  std::size_t i = 0;
  visit_weights(
      [&](const std::string& name, Tensor& t) {
        if (i >= flat.size()) throw ContractViolation("unflatten: too few tensors");
        if (flat[i].name != name) {
          throw ContractViolation("unflatten: expected " + name + ", found " + flat[i].name);
        }
        t = flat[i++].value;
      },
      params);
  if (i != flat.size()) throw ContractViolation("unflatten: too many tensors");
  validate_shapes(params, dims);
  return params;
}

ModelWeights<ad::Var> bind(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  ModelWeights<ad::Var> bound;
  visit_weights(
      [&](const std::string&, const Tensor& t, ad::Var& v) { v = tape.leaf(t, requires_grad); },
      params, bound);
  return bound;
}

ModelWeights<ad::Var> bind_leaves(std::span<const ad::Var> leaves, bool has_visual_in) {
  ModelWeights<ad::Var> bound;
  if (has_visual_in) bound.acp.visual_in.emplace();
  std::size_t i = 0;
  visit_weights(
      [&](const std::string& name, ad::Var& v) {
        if (i >= leaves.size()) throw ContractViolation("bind_leaves: missing leaf for " + name);
        v = leaves[i++];
      },
      bound);
  if (i != leaves.size()) throw ContractViolation("bind_leaves: too many leaves");
  return bound;
}

ModelParams gradients(const ModelWeights<ad::Var>& bound) {
  ModelParams grads;
  visit_weights([](const std::string&, const ad::Var& v, Tensor& g) { g = v.grad(); }, bound,
                grads);
  return grads;
}

}  // namespace clc
