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

#include "frontend/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "common/rng.hpp"

namespace apcr::frontend {

namespace fs = std::filesystem;

std::size_t Corpus::dim() const {
  return empty() ? 0 : utterances.front().features.dim();
}

std::uint16_t Corpus::label_classes() const {
  return empty() ? 0 : utterances.front().features.label_classes;
}

std::size_t Corpus::total_frames() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.features.length();
  return n;
}

void Corpus::validate() const {
  for (const auto& u : utterances) {
    u.features.validate();
    require(u.features.dim() == dim(), ErrorCode::kDimensionMismatch,
            "utterance " + u.id + " has D = " +
                std::to_string(u.features.dim()) + ", corpus has " +
                std::to_string(dim()));
    require(u.features.label_classes == label_classes(),
            ErrorCode::kDimensionMismatch,
            "utterance " + u.id + " has a different label class count");
  }
}

Corpus load_corpus(const std::string& dir,
                   std::optional<std::size_t> expected_dim) {
  require(fs::is_directory(dir), ErrorCode::kIo,
          "corpus directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() &&
        entry.path().extension() == kFeatureExtension) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  Corpus c;
  for (const auto& f : files) {
    c.utterances.push_back(
        Utterance{f.stem().string(), read_features(f.string(), expected_dim)});
  }
  c.validate();
  return c;
}

void save_corpus(const std::string& dir, const Corpus& corpus) {
  corpus.validate();
  fs::create_directories(dir);
  for (const auto& u : corpus.utterances) {
    require(!u.id.empty() && u.id.find('/') == std::string::npos,
            ErrorCode::kInvalidArgument, "invalid utterance id '" + u.id + "'");
    write_features((fs::path(dir) / (u.id + kFeatureExtension)).string(),
                   u.features);
  }
}

std::pair<Corpus, Corpus> split_by_hash(const Corpus& corpus,
                                        double fraction) {
  require(fraction >= 0 && fraction <= 1, ErrorCode::kInvalidArgument,
          "split fraction must lie in [0, 1]");
  const auto cut = static_cast<std::uint64_t>(std::llround(fraction * 10000));
  std::pair<Corpus, Corpus> out;
  for (const auto& u : corpus.utterances) {
    (mix64(stable_hash(u.id)) % 10000 < cut ? out.second : out.first)
        .utterances.push_back(u);
  }
  return out;
}

}  // namespace apcr::frontend
