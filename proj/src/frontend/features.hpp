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
#include <string>
#include <vector>

#include "numcore/tensor.hpp"

namespace apcr::frontend {

using num::Tensor;

inline constexpr std::uint16_t kFeatureFormatVersion = 1;

// N x D frames plus an optional per-frame label track in [0, label_classes).
struct FeatureMatrix {
  Tensor<float> frames;
  std::uint32_t frame_period_us = 10000;
  std::uint16_t label_classes = 0;  // 0 = no labels
  std::vector<std::uint16_t> labels;

  std::size_t length() const { return frames.rows(); }
  std::size_t dim() const { return frames.cols(); }
  bool has_labels() const { return label_classes > 0; }
  void validate() const;
  bool operator==(const FeatureMatrix&) const = default;
};

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m);
FeatureMatrix decode_features(std::span<const std::uint8_t> bytes,
                              std::optional<std::size_t> expected_dim = {});
void write_features(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_features(const std::string& path,
                            std::optional<std::size_t> expected_dim = {});

}  // namespace apcr::frontend
