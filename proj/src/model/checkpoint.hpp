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
#include <string>
#include <vector>

#include "model/encoder.hpp"
#include "numcore/adam.hpp"
#include "objectives/config.hpp"

namespace apcr::model {

// Per-dimension standardization fitted on the training split. It travels
// with the model so feature files stay raw.
struct Normalizer {
  std::vector<float> mean;
  std::vector<float> stddev;

  static Normalizer identity(std::size_t dim);
  static Normalizer fit(std::span<const Tensor<float>* const> utterances);

  std::size_t dim() const { return mean.size(); }
  Tensor<float> apply(const Tensor<float>& frames) const;

  bool operator==(const Normalizer&) const = default;
};

// Optimizer and schedule state needed to resume training bit-identically.
struct TrainingBlock {
  Objective objective = Objective::kLm;
  std::uint64_t seed = 0;
  std::uint32_t epochs_done = 0;
  std::uint32_t epochs = 100;
  std::uint32_t batch_size = 32;
  float learning_rate = 1e-3f;
  float clip_norm = 0.0f;
  num::AdamState<float> adam;

  bool operator==(const TrainingBlock&) const = default;
};

struct Checkpoint {
  ObjectiveConfig objective;
  std::uint64_t init_seed = 0;
  Normalizer normalizer;
  EncoderParams<float> params;
  std::optional<TrainingBlock> training;

  bool operator==(const Checkpoint&) const = default;
};

inline constexpr char kCheckpointMagic[4] = {'P', 'C', 'K', 'P'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes,
                             const std::string& context = "checkpoint");

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);

// Throws kDimensionMismatch when expected_feature_dim is given and differs
// from the stored model.
Checkpoint load_checkpoint(
    const std::string& path,
    std::optional<std::size_t> expected_feature_dim = std::nullopt);

}  // namespace apcr::model
