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

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "numcore/tape.hpp"

namespace apcr::num {

// Builds a scalar loss on `tape` from parameters that have already been
// registered as leaves (in the same order as the parameter list).
using LossBuilder =
    std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
};

// Compares reverse-mode gradients with central differences over every
// coordinate of every parameter. Error per coordinate is
// |analytic - numeric| / max(1, |numeric|).
inline GradCheckResult finite_diff_check(const LossBuilder& build,
                                         std::vector<Tensor<double>> params,
                                         double step = 1e-5) {
  auto evaluate = [&](const std::vector<Tensor<double>>& values,
                      std::vector<Tensor<double>>* grads) {
    Tape<double> tape;
    std::vector<Var<double>> leaves;
    leaves.reserve(values.size());
    for (const auto& v : values) leaves.push_back(tape.leaf(v));
    Var<double> loss = build(tape, leaves);
    const double value = loss.value()[0];
    require(std::isfinite(value), ErrorCode::kNonFinite,
            "finite_diff_check: loss is not finite");
    if (grads) *grads = reverse_gradients<double>(tape, loss, leaves);
    return value;
  };

  std::vector<Tensor<double>> analytic;
  evaluate(params, &analytic);

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      const double original = params[p][i];
      params[p][i] = original + step;
      const double up = evaluate(params, nullptr);
      params[p][i] = original - step;
      const double down = evaluate(params, nullptr);
      params[p][i] = original;
      const double numeric = (up - down) / (2 * step);
      const double err =
          std::abs(analytic[p][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > result.max_relative_error) {
        result = GradCheckResult{err, p, i};
      }
    }
  }
  return result;
}

}  // namespace apcr::num
