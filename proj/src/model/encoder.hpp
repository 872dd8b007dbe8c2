/*
 * Copyright 2026 The apcr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "model/gru.hpp"

namespace apcr::model {

struct EncoderConfig {
  std::size_t layers = 3;
  std::size_t hidden = 512;
  std::size_t feature_dim = 80;
  bool projection_bias = false;

  void validate() const {
    require(layers >= 1 && hidden >= 1 && feature_dim >= 1,
            ErrorCode::kInvalidArgument,
            "encoder layers, hidden and feature dims must be positive");
  }

  bool operator==(const EncoderConfig&) const = default;
};

// Main stack, auxiliary stack (same layout, so main states can seed it) and
// the two projections W, W_aux mapping hidden states back to frame space.
template <typename T>
struct EncoderParams {
  EncoderConfig config;
  std::vector<GruLayer<T>> main;
  std::vector<GruLayer<T>> aux;
  Tensor<T> proj;      // D x H
  Tensor<T> aux_proj;  // D x H
  Tensor<T> proj_bias;      // D, only with config.projection_bias
  Tensor<T> aux_proj_bias;  // D, only with config.projection_bias

  static EncoderParams zeros(const EncoderConfig& config) {
    config.validate();
    EncoderParams p;
    p.config = config;
    for (std::size_t k = 0; k < config.layers; ++k) {
      const std::size_t in = k == 0 ? config.feature_dim : config.hidden;
      p.main.push_back(GruLayer<T>::zeros(in, config.hidden));
      p.aux.push_back(GruLayer<T>::zeros(in, config.hidden));
    }
    p.proj = Tensor<T>::matrix(config.feature_dim, config.hidden);
    p.aux_proj = Tensor<T>::matrix(config.feature_dim, config.hidden);
    if (config.projection_bias) {
      p.proj_bias = Tensor<T>({config.feature_dim});
      p.aux_proj_bias = Tensor<T>({config.feature_dim});
    }
    return p;
  }

  static EncoderParams initialized(const EncoderConfig& config,
                                   std::uint64_t seed) {
    EncoderParams p = zeros(config);
    Rng rng(seed);
    for (std::size_t k = 0; k < config.layers; ++k) {
      const std::size_t in = k == 0 ? config.feature_dim : config.hidden;
      p.main[k] = GruLayer<T>::initialized(in, config.hidden, rng);
    }
    for (std::size_t k = 0; k < config.layers; ++k) {
      const std::size_t in = k == 0 ? config.feature_dim : config.hidden;
      p.aux[k] = GruLayer<T>::initialized(in, config.hidden, rng);
    }
    const double bound = std::sqrt(1.0 / static_cast<double>(config.hidden));
    for (auto* w : {&p.proj, &p.aux_proj})
      for (auto& v : w->storage())
        v = static_cast<T>((2 * uniform01(rng) - 1) * bound);
    return p;
  }

  // All parameter tensors in checkpoint order: main layers, aux layers,
  // W, W_aux, then the optional projection biases.
  std::vector<Tensor<T>*> tensors() {
    std::vector<Tensor<T>*> out;
    for (auto& l : main)
      for (auto* t : l.tensors()) out.push_back(t);
    for (auto& l : aux)
      for (auto* t : l.tensors()) out.push_back(t);
    out.push_back(&proj);
    out.push_back(&aux_proj);
    if (config.projection_bias) {
      out.push_back(&proj_bias);
      out.push_back(&aux_proj_bias);
    }
    return out;
  }
  std::vector<const Tensor<T>*> tensors() const {
    std::vector<const Tensor<T>*> out;
    for (auto* t : const_cast<EncoderParams*>(this)->tensors())
      out.push_back(t);
    return out;
  }

  template <typename U>
  EncoderParams<U> cast() const {
    EncoderParams<U> out = EncoderParams<U>::zeros(config);
    auto dst = out.tensors();
    auto src = tensors();
    for (std::size_t i = 0; i < src.size(); ++i)
      *dst[i] = src[i]->template cast<U>();
    return out;
  }

  bool operator==(const EncoderParams&) const = default;
};

template <typename T>
struct StackVars {
  std::vector<GruLayerVars<T>> layers;
};

template <typename T>
struct EncoderVars {
  StackVars<T> main;
  StackVars<T> aux;
  Var<T> proj;
  Var<T> aux_proj;
  std::optional<Var<T>> proj_bias;
  std::optional<Var<T>> aux_proj_bias;
  std::vector<Var<T>> leaves;  // same order as EncoderParams::tensors()
};

namespace detail {
template <typename T, typename Put>
EncoderVars<T> bind_with(const EncoderParams<T>& params, Put put) {
  EncoderVars<T> v;
  auto bind_stack = [&](const std::vector<GruLayer<T>>& stack) {
    StackVars<T> s;
    for (const auto& l : stack) {
      GruLayerVars<T> lv;
      lv.w_update = put(l.w_update);
      lv.w_reset = put(l.w_reset);
      lv.w_candidate = put(l.w_candidate);
      lv.u_update = put(l.u_update);
      lv.u_reset = put(l.u_reset);
      lv.u_candidate = put(l.u_candidate);
      lv.b_update = put(l.b_update);
      lv.b_reset = put(l.b_reset);
      lv.b_candidate = put(l.b_candidate);
      s.layers.push_back(lv);
    }
    return s;
  };
  v.main = bind_stack(params.main);
  v.aux = bind_stack(params.aux);
  v.proj = put(params.proj);
  v.aux_proj = put(params.aux_proj);
  if (params.config.projection_bias) {
    v.proj_bias = put(params.proj_bias);
    v.aux_proj_bias = put(params.aux_proj_bias);
  }
  return v;
}
}  // namespace detail

// Registers every parameter on the tape, as differentiable leaves or as
// constants for inference.
template <typename T>
EncoderVars<T> bind(Tape<T>& tape, const EncoderParams<T>& params,
                    bool differentiable) {
  std::vector<Var<T>> leaves;
  auto v = detail::bind_with(params, [&](const Tensor<T>& t) {
    Var<T> var = differentiable ? tape.leaf(t) : tape.constant(t);
    leaves.push_back(var);
    return var;
  });
  v.leaves = std::move(leaves);
  return v;
}

// Wires already-registered variables (in tensors() order) into the model
// structure of `params`; values come from the variables.
template <typename T>
EncoderVars<T> bind(const EncoderParams<T>& params,
                    std::span<const Var<T>> vars) {
  const std::size_t expected = params.tensors().size();
  require(vars.size() == expected, ErrorCode::kInvalidArgument,
          "bind: expected " + std::to_string(expected) + " variables, got " +
              std::to_string(vars.size()));
  std::size_t next = 0;
  auto v = detail::bind_with(params, [&](const Tensor<T>& t) {
    const Var<T>& var = vars[next++];
    require(var.value().shape() == t.shape(), ErrorCode::kDimensionMismatch,
            "bind: variable shape differs from parameter");
    return var;
  });
  v.leaves.assign(vars.begin(), vars.end());
  return v;
}

// Outputs of a stack run over a time-major [T*B, D] input block.
template <typename T>
struct StackTrace {
  std::vector<std::vector<Var<T>>> steps;  // [layer][t] -> [B, H]
  std::vector<Var<T>> outputs;             // [layer] -> [T*B, H]
};

// Runs every layer over all time steps. Layer k > 0 consumes
// output(k-1) + input(k-1) when the widths agree (residual path), otherwise
// output(k-1). `initial` holds one [B, H] state per layer; empty means zeros.
template <typename T>
StackTrace<T> stack_forward(const StackVars<T>& stack, Var<T> inputs,
                            std::size_t steps, std::size_t batch,
                            const std::vector<Var<T>>& initial = {}) {
  Tape<T>& tape = *inputs.tape;
  require(inputs.value().rows() == steps * batch,
          ErrorCode::kDimensionMismatch,
          "stack_forward: input rows do not match steps x batch");
  require(initial.empty() || initial.size() == stack.layers.size(),
          ErrorCode::kDimensionMismatch,
          "stack_forward: one initial state per layer required");
  StackTrace<T> trace;
  Var<T> layer_in = inputs;
  for (std::size_t k = 0; k < stack.layers.size(); ++k) {
    const GruLayerVars<T>& l = stack.layers[k];
    const std::size_t hidden = l.u_update.value().rows();
    Var<T> xz = num::add_row(num::matmul_nt(layer_in, l.w_update), l.b_update);
    Var<T> xr = num::add_row(num::matmul_nt(layer_in, l.w_reset), l.b_reset);
    Var<T> xc =
        num::add_row(num::matmul_nt(layer_in, l.w_candidate), l.b_candidate);
    Var<T> h = initial.empty()
                   ? tape.constant(Tensor<T>::matrix(batch, hidden))
                   : initial[k];
    require(h.value().rows() == batch && h.value().cols() == hidden,
            ErrorCode::kDimensionMismatch,
            "stack_forward: initial state shape for layer " +
                std::to_string(k));
    std::vector<Var<T>> states;
    states.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      h = gru_recurrence(l, num::slice_rows(xz, t * batch, batch),
                         num::slice_rows(xr, t * batch, batch),
                         num::slice_rows(xc, t * batch, batch), h);
      states.push_back(h);
    }
    Var<T> out = num::concat_rows(states);
    trace.steps.push_back(std::move(states));
    trace.outputs.push_back(out);
    if (k + 1 < stack.layers.size()) {
      layer_in = layer_in.value().cols() == hidden ? out + layer_in : out;
    }
  }
  return trace;
}

// y = hidden * W^T (+ bias).
template <typename T>
Var<T> project(Var<T> hidden, Var<T> weights,
               std::optional<Var<T>> bias = std::nullopt) {
  Var<T> y = num::matmul_nt(hidden, weights);
  return bias ? num::add_row(y, *bias) : y;
}

// Per-layer hidden sequences for one utterance, each N x H; the last
// layer is the representation.
template <typename T>
struct HiddenStates {
  std::vector<Tensor<T>> layers;

  const Tensor<T>& representation() const { return layers.back(); }
};

template <typename T>
HiddenStates<T> stack_forward(const std::vector<GruLayer<T>>& stack,
                              const Tensor<T>& frames,
                              const std::vector<Tensor<T>>& initial = {}) {
  require(!stack.empty(), ErrorCode::kInvalidArgument, "empty GRU stack");
  require(frames.cols() == stack.front().input_dim(),
          ErrorCode::kDimensionMismatch,
          "stack_forward: frames have dimension " +
              std::to_string(frames.cols()) + ", model expects " +
              std::to_string(stack.front().input_dim()));
  Tape<T> tape;
  StackVars<T> vars;
  for (const auto& l : stack) {
    GruLayerVars<T> lv;
    Var<T>* dst[] = {&lv.w_update, &lv.w_reset, &lv.w_candidate,
                     &lv.u_update, &lv.u_reset, &lv.u_candidate,
                     &lv.b_update, &lv.b_reset, &lv.b_candidate};
    auto src = l.tensors();
    for (std::size_t i = 0; i < GruLayer<T>::kTensorCount; ++i)
      *dst[i] = tape.constant(*src[i]);
    vars.layers.push_back(lv);
  }
  std::vector<Var<T>> init;
  for (const auto& s : initial) {
    init.push_back(tape.constant(Tensor<T>({1, s.size()}, s.storage())));
  }
  auto trace = stack_forward(vars, tape.constant(frames), frames.rows(), 1,
                             init);
  HiddenStates<T> out;
  for (Var<T> o : trace.outputs) out.layers.push_back(o.value());
  return out;
}

// The last layer's hidden sequence h_1..h_N.
template <typename T>
Tensor<T> extract_features(const EncoderParams<T>& params,
                           const Tensor<T>& frames) {
  require(frames.cols() == params.config.feature_dim,
          ErrorCode::kDimensionMismatch,
          "extract_features: frames have dimension " +
              std::to_string(frames.cols()) + ", checkpoint expects " +
              std::to_string(params.config.feature_dim));
  return stack_forward(params.main, frames).representation();
}

template <typename T>
Tensor<T> project(const Tensor<T>& weights, const Tensor<T>& hidden) {
  require(weights.cols() == hidden.cols(), ErrorCode::kDimensionMismatch,
          "project: W is " + num::shape_string(weights.shape()) +
              ", hidden rows have " + std::to_string(hidden.cols()) +
              " columns");
  return num::matmul_nt(hidden, weights);
}

}  // namespace apcr::model
