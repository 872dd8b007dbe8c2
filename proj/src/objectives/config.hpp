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
#include <cstddef>
#include <cstdint>
#include <string>

#include "common/error.hpp"

namespace apcr {

// How the auxiliary stack's initial states are taken from the main stack at
// an anchor.
enum class SeedMode : std::uint8_t {
  kPerLayer = 0,        // aux layer k starts from main layer k's state
  kLastLayerToAll = 1,  // every aux layer starts from the top main state h_t
};

// Which loss the optimizer minimizes: future prediction only, or future
// prediction plus the weighted past-window term.
enum class Objective : std::uint8_t { kLf = 0, kLm = 1 };

// Future horizon n, past window (offset s, length l), anchor probability P
// and balancing weight lambda.
struct ObjectiveConfig {
  std::size_t horizon = 1;
  std::size_t past_offset = 7;
  std::size_t past_length = 3;
  double anchor_probability = 0.15;
  double lambda = 0.1;
  SeedMode seed_mode = SeedMode::kPerLayer;

  void validate() const {
    require(horizon >= 1, ErrorCode::kInvalidArgument, "horizon n must be >= 1");
    require(past_offset >= 1, ErrorCode::kInvalidArgument,
            "past offset s must be >= 1");
    require(past_length >= 1, ErrorCode::kInvalidArgument,
            "past length l must be >= 1");
    require(anchor_probability >= 0 && anchor_probability <= 1,
            ErrorCode::kInvalidArgument, "anchor probability must be in [0,1]");
    require(std::isfinite(lambda) && lambda >= 0, ErrorCode::kInvalidArgument,
            "lambda must be finite and >= 0");
  }

  bool operator==(const ObjectiveConfig&) const = default;
};

}  // namespace apcr
