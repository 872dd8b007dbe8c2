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

#include <optional>
#include <string>
#include <vector>

#include "frontend/features.hpp"

namespace apcr::frontend {

inline constexpr char kFeatureExtension[] = ".pcrp";

struct Utterance {
  std::string id;
  FeatureMatrix features;
  bool operator==(const Utterance&) const = default;
};

// A corpus on disk is a directory of <id>.pcrp files; loading sorts by id.
struct Corpus {
  std::vector<Utterance> utterances;

  bool empty() const { return utterances.empty(); }
  std::size_t size() const { return utterances.size(); }
  std::size_t dim() const;
  std::uint16_t label_classes() const;
  std::size_t total_frames() const;
  // Throws unless every utterance shares D and the label class count.
  void validate() const;
  bool operator==(const Corpus&) const = default;
};

Corpus load_corpus(const std::string& dir,
                   std::optional<std::size_t> expected_dim = {});
void save_corpus(const std::string& dir, const Corpus& corpus);

// Deterministic split by stable hash of the utterance id: an utterance is
// held out when mix(hash(id)) mod 10000 < fraction * 10000.
std::pair<Corpus, Corpus> split_by_hash(const Corpus& corpus, double fraction);

}  // namespace apcr::frontend
