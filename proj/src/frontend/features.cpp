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

#include "frontend/features.hpp"

#include "common/binary_io.hpp"

namespace apcr::frontend {
namespace {
constexpr char kMagic[] = "PCRP";
}

void FeatureMatrix::validate() const {
  require(frames.rank() == 2, ErrorCode::kInvalidArgument,
          "feature matrix must be N x D");
  require(dim() <= 0xFFFF, ErrorCode::kInvalidArgument,
          "feature dimension exceeds the format limit");
  require(length() <= 0xFFFFFFFFu, ErrorCode::kInvalidArgument,
          "too many frames for the format");
  if (label_classes == 0) {
    require(labels.empty(), ErrorCode::kInvalidArgument,
            "labels present but label class count is 0");
    return;
  }
  require(labels.size() == length(), ErrorCode::kDimensionMismatch,
          "label track has " + std::to_string(labels.size()) +
              " entries for " + std::to_string(length()) + " frames");
  for (auto l : labels) {
    require(l < label_classes, ErrorCode::kInvalidArgument,
            "label " + std::to_string(l) + " outside [0, " +
                std::to_string(label_classes) + ")");
  }
}

std::vector<std::uint8_t> encode_features(const FeatureMatrix& m) {
  m.validate();
  ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put<std::uint16_t>(kFeatureFormatVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(m.dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.length()));
  w.put<std::uint32_t>(m.frame_period_us);
  w.put<std::uint16_t>(m.label_classes);
  w.put_span<float>(m.frames.storage());
  if (m.has_labels()) w.put_span<std::uint16_t>(m.labels);
  return w.bytes();
}

FeatureMatrix decode_features(std::span<const std::uint8_t> bytes,
                              std::optional<std::size_t> expected_dim) {
  ByteReader r(bytes, "feature file");
  require(bytes.size() >= 4 && r.get_bytes(4) == std::string_view(kMagic, 4),
          ErrorCode::kBadMagic, "feature file: bad magic");
  const auto version = r.get<std::uint16_t>();
  require(version == kFeatureFormatVersion, ErrorCode::kVersionMismatch,
          "feature file: unsupported version " + std::to_string(version));
  const auto dim = r.get<std::uint16_t>();
  const auto count = r.get<std::uint32_t>();
  FeatureMatrix m;
  m.frame_period_us = r.get<std::uint32_t>();
  m.label_classes = r.get<std::uint16_t>();
  require(dim > 0 && count > 0, ErrorCode::kCorrupt,
          "feature file: empty matrix");
  if (expected_dim) {
    require(dim == *expected_dim, ErrorCode::kDimensionMismatch,
            "feature file: D = " + std::to_string(dim) + ", expected " +
                std::to_string(*expected_dim));
  }
  m.frames = Tensor<float>::matrix(count, dim);
  r.get_span<float>(m.frames.storage());
  if (m.label_classes > 0) {
    m.labels.resize(count);
    r.get_span<std::uint16_t>(m.labels);
    for (auto l : m.labels) {
      require(l < m.label_classes, ErrorCode::kCorrupt,
              "feature file: label out of range");
    }
  }
  require(r.remaining() == 0, ErrorCode::kCorrupt,
          "feature file: trailing bytes");
  return m;
}

void write_features(const std::string& path, const FeatureMatrix& m) {
  write_file(path, encode_features(m));
}

FeatureMatrix read_features(const std::string& path,
                            std::optional<std::size_t> expected_dim) {
  try {
    return decode_features(read_file(path), expected_dim);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

}  // namespace apcr::frontend
