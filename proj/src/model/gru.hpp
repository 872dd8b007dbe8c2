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

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "common/rng.hpp"
#include "numcore/ops.hpp"

namespace apcr::model {

using num::Tape;
using num::Tensor;
using num::Var;

// Parameters of one GRU layer, one matrix per gate and path. Input matrices
// are hidden x input, recurrent matrices hidden x hidden.
template <typename T>
struct GruLayer {
  Tensor<T> w_update, w_reset, w_candidate;
  Tensor<T> u_update, u_reset, u_candidate;
  Tensor<T> b_update, b_reset, b_candidate;

  static constexpr std::size_t kTensorCount = 9;

  std::size_t input_dim() const { return w_update.cols(); }
  std::size_t hidden_dim() const { return w_update.rows(); }

  std::array<Tensor<T>*, kTensorCount> tensors() {
    return {&w_update, &w_reset, &w_candidate, &u_update, &u_reset,
            &u_candidate, &b_update, &b_reset, &b_candidate};
  }
  std::array<const Tensor<T>*, kTensorCount> tensors() const {
    return {&w_update, &w_reset, &w_candidate, &u_update, &u_reset,
            &u_candidate, &b_update, &b_reset, &b_candidate};
  }

  static GruLayer zeros(std::size_t input_dim, std::size_t hidden_dim) {
    GruLayer l;
    for (auto* w : {&l.w_update, &l.w_reset, &l.w_candidate})
      *w = Tensor<T>::matrix(hidden_dim, input_dim);
    for (auto* u : {&l.u_update, &l.u_reset, &l.u_candidate})
      *u = Tensor<T>::matrix(hidden_dim, hidden_dim);
    for (auto* b : {&l.b_update, &l.b_reset, &l.b_candidate})
      *b = Tensor<T>({hidden_dim});
    return l;
  }

  // Input matrices uniform in +-sqrt(1/fan_in), recurrent matrices
  // orthogonal, biases zero.
  static GruLayer initialized(std::size_t input_dim, std::size_t hidden_dim,
                              Rng& rng) {
    GruLayer l = zeros(input_dim, hidden_dim);
    const double bound = std::sqrt(1.0 / static_cast<double>(input_dim));
    for (auto* w : {&l.w_update, &l.w_reset, &l.w_candidate})
      for (auto& v : w->storage())
        v = static_cast<T>((2 * uniform01(rng) - 1) * bound);
    for (auto* u : {&l.u_update, &l.u_reset, &l.u_candidate})
      *u = random_orthogonal(hidden_dim, rng);
    return l;
  }

  template <typename U>
  GruLayer<U> cast() const {
    GruLayer<U> out;
    auto dst = out.tensors();
    auto src = tensors();
    for (std::size_t i = 0; i < kTensorCount; ++i)
      *dst[i] = src[i]->template cast<U>();
    return out;
  }

  bool operator==(const GruLayer&) const = default;

 private:
  // Modified Gram-Schmidt on the rows of a Gaussian matrix.
  static Tensor<T> random_orthogonal(std::size_t n, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> q(n * n);
    for (auto& v : q) v = gauss(rng);
    for (std::size_t i = 0; i < n; ++i) {
      double* qi = q.data() + i * n;
      for (std::size_t j = 0; j < i; ++j) {
        const double* qj = q.data() + j * n;
        double dot = 0;
        for (std::size_t k = 0; k < n; ++k) dot += qi[k] * qj[k];
        for (std::size_t k = 0; k < n; ++k) qi[k] -= dot * qj[k];
      }
      double norm = 0;
      for (std::size_t k = 0; k < n; ++k) norm += qi[k] * qi[k];
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < n; ++k) qi[k] /= norm;
    }
    Tensor<T> out = Tensor<T>::matrix(n, n);
    for (std::size_t i = 0; i < n * n; ++i) out[i] = static_cast<T>(q[i]);
    return out;
  }
};

template <typename T>
struct GruLayerVars {
  Var<T> w_update, w_reset, w_candidate;
  Var<T> u_update, u_reset, u_candidate;
  Var<T> b_update, b_reset, b_candidate;
};

// One recurrent step given the input-path pre-activations
// (x*W^T + b for each gate), which are computed for all time steps at once.
//   z = sigmoid(xz + h U_z^T)
//   r = sigmoid(xr + h U_r^T)
//   c = tanh(xc + (r*h) U_c^T)
//   h' = z*h + (1-z)*c
template <typename T>
Var<T> gru_recurrence(const GruLayerVars<T>& l, Var<T> xz, Var<T> xr,
                      Var<T> xc, Var<T> h) {
  Var<T> z = num::sigmoid(xz + num::matmul_nt(h, l.u_update));
  Var<T> r = num::sigmoid(xr + num::matmul_nt(h, l.u_reset));
  Var<T> c = num::tanh(xc + num::matmul_nt(r * h, l.u_candidate));
  return num::gru_blend(z, h, c);
}

template <typename T>
Tensor<T> gru_cell_step(const GruLayer<T>& layer, const Tensor<T>& input,
                        const Tensor<T>& state) {
  require(input.size() == layer.input_dim() &&
              state.size() == layer.hidden_dim(),
          ErrorCode::kDimensionMismatch,
          "gru_cell_step: input " + num::shape_string(input.shape()) +
              " / state " + num::shape_string(state.shape()) +
              " for a layer of " + std::to_string(layer.input_dim()) + "->" +
              std::to_string(layer.hidden_dim()));
  Tape<T> tape;
  GruLayerVars<T> v;
  Var<T>* dst[] = {&v.w_update, &v.w_reset, &v.w_candidate,
                   &v.u_update, &v.u_reset, &v.u_candidate,
                   &v.b_update, &v.b_reset, &v.b_candidate};
  auto src = layer.tensors();
  for (std::size_t i = 0; i < GruLayer<T>::kTensorCount; ++i)
    *dst[i] = tape.constant(*src[i]);
  Var<T> x = tape.constant(Tensor<T>({1, input.size()}, input.storage()));
  Var<T> h = tape.constant(Tensor<T>({1, state.size()}, state.storage()));
  Var<T> xz = num::add_row(num::matmul_nt(x, v.w_update), v.b_update);
  Var<T> xr = num::add_row(num::matmul_nt(x, v.w_reset), v.b_reset);
  Var<T> xc = num::add_row(num::matmul_nt(x, v.w_candidate), v.b_candidate);
  return Tensor<T>({state.size()},
                   gru_recurrence(v, xz, xr, xc, h).value().storage());
}

}  // namespace apcr::model
