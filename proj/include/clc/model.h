// Copyright 2026 The CLC Authors.
// SPDX-License-Identifier: Apache-2.0

// Learnable parameters of the full model: the cross-propagation block and the
// three temporal heads. Weight structs are templated on the element type so
// the same layout holds plain tensors (storage, checkpoints, SGD) and tape
// variables (forward/backward).

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "clc/autodiff.h"
#include "clc/tensor.h"

namespace clc {

struct ModelDims {
  std::size_t visual_dim = 512;
  std::size_t audio_dim = 2048;
  std::size_t model_dim = 512;
  std::size_t hidden = 128;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

template <class T>
struct Linear {
  T weight;
  T bias;
};

template <class T>
struct AcpWeights {
  /// Present only when the visual feature dimension differs from model_dim.
  std::optional<Linear<T>> visual_in;
  Linear<T> audio_proj;
  /// W1..W6 for each modality; index 0 holds W1.
  std::array<T, 6> visual;
  std::array<T, 6> audio;
  Linear<T> fuse_v_in, fuse_v_out;
  Linear<T> fuse_a_in, fuse_a_out;
};

/// Gate blocks are laid out [update | reset | candidate] along columns.
template <class T>
struct GruWeights {
  T input;         // k x 3H
  T hidden;        // H x 3H
  T input_bias;    // 1 x 3H
  T hidden_bias;   // 1 x 3H
};

template <class T>
struct HeadWeights {
  GruWeights<T> forward;
  GruWeights<T> backward;
  Linear<T> classifier;  // 2H x 2
};

template <class T>
struct ModelWeights {
  AcpWeights<T> acp;
  HeadWeights<T> mm;
  HeadWeights<T> visual;
  HeadWeights<T> audio;
};

using ModelParams = ModelWeights<Tensor>;

namespace detail {

template <class O>
void ensure_engaged(O& o) {
  if constexpr (!std::is_const_v<O>) {
    if (!o) o.emplace();
  }
}

template <class F, class... L>
void visit_linear(const std::string& prefix, F& f, L&... l) {
  f(prefix + ".weight", l.weight...);
  f(prefix + ".bias", l.bias...);
}

template <class F, class... G>
void visit_gru(const std::string& prefix, F& f, G&... g) {
  f(prefix + ".input", g.input...);
  f(prefix + ".hidden", g.hidden...);
  f(prefix + ".input_bias", g.input_bias...);
  f(prefix + ".hidden_bias", g.hidden_bias...);
}

template <class F, class... H>
void visit_head(const std::string& prefix, F& f, H&... h) {
  visit_gru(prefix + ".gru_forward", f, h.forward...);
  visit_gru(prefix + ".gru_backward", f, h.backward...);
  visit_linear(prefix + ".classifier", f, h.classifier...);
}

template <class First, class... Rest>
First& first_of(First& first, Rest&...) {
  return first;
}

}  // namespace detail

/// Visits every weight in the canonical checkpoint order, passing the
/// parameter name and the matching entry of each structure. All structures
/// take the optional visual projection from the first one.
template <class F, class... W>
void visit_weights(F&& f, W&... w) {
  using detail::visit_gru;
  using detail::visit_head;
  using detail::visit_linear;
  if (detail::first_of(w...).acp.visual_in) {
    (detail::ensure_engaged(w.acp.visual_in), ...);
    visit_linear("acp.visual_in", f, *w.acp.visual_in...);
  }
  visit_linear("acp.audio_proj", f, w.acp.audio_proj...);
  for (std::size_t i = 0; i < 6; ++i) f("acp.w" + std::to_string(i + 1) + "_v", w.acp.visual[i]...);
  for (std::size_t i = 0; i < 6; ++i) f("acp.w" + std::to_string(i + 1) + "_a", w.acp.audio[i]...);
  visit_linear("acp.fuse_v_in", f, w.acp.fuse_v_in...);
  visit_linear("acp.fuse_v_out", f, w.acp.fuse_v_out...);
  visit_linear("acp.fuse_a_in", f, w.acp.fuse_a_in...);
  visit_linear("acp.fuse_a_out", f, w.acp.fuse_a_out...);
  visit_head("mm", f, w.mm...);
  visit_head("visual", f, w.visual...);
  visit_head("audio", f, w.audio...);
}

/// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] initialization from `seed`.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Checks every tensor against the shapes implied by `dims`.
void validate_shapes(const ModelParams& params, const ModelDims& dims);

std::size_t parameter_count(const ModelParams& params);

/// Flattened copy in canonical order, for gradient checks and checkpoints.
std::vector<ad::NamedTensor> flatten(const ModelParams& params);
ModelParams unflatten(std::span<const ad::NamedTensor> flat, const ModelDims& dims);

/// Records every parameter as a leaf on `tape`.
ModelWeights<ad::Var> bind(ad::Tape& tape, const ModelParams& params, bool requires_grad);

/// Rebuilds the weight layout from leaves given in canonical order.
ModelWeights<ad::Var> bind_leaves(std::span<const ad::Var> leaves, bool has_visual_in);

/// Reads the accumulated gradients of bound leaves into tensor form.
ModelParams gradients(const ModelWeights<ad::Var>& bound);

struct Model {
  ModelDims dims;
  ModelParams params;
};

}  // namespace clc
