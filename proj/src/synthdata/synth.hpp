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
#include <vector>

#include "common/rng.hpp"
#include "frontend/corpus.hpp"

namespace apcr::synth {

using num::Tensor;

struct SynthConfig {
  std::size_t classes = 8;
  std::size_t dim = 20;
  double mean_duration = 7.0;  // geometric, support {1, 2, ...}
  double mean_scale = 1.0;     // class c has mean mean_scale * e_c
  double noise_scale = 1.0;    // per-dimension Gaussian std
  // Row-stochastic C x C with zero diagonal; empty = uniform over the other
  // classes.
  std::vector<std::vector<double>> transitions;
  std::size_t min_length = 50;
  std::size_t max_length = 150;
  std::uint64_t seed = 1;

  void validate() const;
  std::vector<std::vector<double>> transition_matrix() const;
};

// 1 + Geometric failures with success probability 1 / mean.
std::size_t sample_duration(double mean, Rng& rng);

std::vector<std::vector<float>> class_means(const SynthConfig& cfg);

// One utterance; `rng` fully determines it.
frontend::Utterance generate_utterance(const SynthConfig& cfg,
                                       std::string id, Rng& rng);

// Utterance i is drawn from its own stream derived from (seed, i) and is
// named utt%05d.
frontend::Corpus generate_corpus(const SynthConfig& cfg, std::size_t count);

}  // namespace apcr::synth
