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

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "numcore/tensor.hpp"

namespace apcr::num {

template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);
  T learning_rate = T(1e-3);
  std::vector<Tensor<T>> first_moment;
  std::vector<Tensor<T>> second_moment;

  static AdamState for_params(std::span<const Tensor<T>* const> params,
                              T learning_rate) {
    AdamState state;
    state.learning_rate = learning_rate;
    for (const Tensor<T>* p : params) {
      state.first_moment.push_back(Tensor<T>::zeros_like(*p));
      state.second_moment.push_back(Tensor<T>::zeros_like(*p));
    }
    return state;
  }

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update. Moments are lazily shaped on the first
// call when the state was default-constructed.
template <typename T>
void adam_step(AdamState<T>& state, std::span<Tensor<T>* const> params,
               std::span<const Tensor<T>> grads) {
  require(params.size() == grads.size(), ErrorCode::kDimensionMismatch,
          "adam_step: " + std::to_string(params.size()) + " params but " +
              std::to_string(grads.size()) + " gradients");
  if (state.first_moment.empty()) {
    for (const Tensor<T>* p : params) {
      state.first_moment.push_back(Tensor<T>::zeros_like(*p));
      state.second_moment.push_back(Tensor<T>::zeros_like(*p));
    }
  }
  require(state.first_moment.size() == params.size(),
          ErrorCode::kDimensionMismatch, "adam_step: moment count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->same_shape(grads[i]) &&
                params[i]->same_shape(state.first_moment[i]),
            ErrorCode::kDimensionMismatch,
            "adam_step: parameter " + std::to_string(i) + " shape " +
                shape_string(params[i]->shape()) + " vs gradient " +
                shape_string(grads[i].shape()));
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T correction1 = static_cast<T>(1.0 - std::pow(double(state.beta1), t));
  const T correction2 = static_cast<T>(1.0 - std::pow(double(state.beta2), t));
  const T b1 = state.beta1, b2 = state.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    const T* g = grads[i].data();
    T* m = state.first_moment[i].data();
    T* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] / correction1;
      const T v_hat = v[j] / correction2;
      p[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace apcr::num
