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

#include "synthdata/synth.hpp"

#include <cmath>
#include <cstdio>

namespace apcr::synth {

void SynthConfig::validate() const {
  require(classes >= 2 && classes <= 0xFFFF, ErrorCode::kInvalidArgument,
          "synth: need at least 2 classes");
  require(dim >= classes && dim <= 0xFFFF, ErrorCode::kInvalidArgument,
          "synth: feature dim must be at least the class count so class "
          "means stay linearly separable");
  require(mean_duration >= 1.0, ErrorCode::kInvalidArgument,
          "synth: mean duration must be >= 1");
  require(noise_scale >= 0 && mean_scale > 0, ErrorCode::kInvalidArgument,
          "synth: scales must be non-negative (mean scale positive)");
  require(min_length >= 1 && min_length <= max_length,
          ErrorCode::kInvalidArgument, "synth: bad utterance length range");
  if (transitions.empty()) return;
  require(transitions.size() == classes, ErrorCode::kInvalidArgument,
          "synth: transition matrix must be C x C");
  for (std::size_t i = 0; i < classes; ++i) {
    const auto& row = transitions[i];
    require(row.size() == classes, ErrorCode::kInvalidArgument,
            "synth: transition matrix must be C x C");
    double sum = 0;
    for (double p : row) {
      require(p >= 0 && std::isfinite(p), ErrorCode::kInvalidArgument,
              "synth: transition probabilities must be finite and >= 0");
      sum += p;
    }
    require(std::abs(sum - 1.0) < 1e-9, ErrorCode::kInvalidArgument,
            "synth: transition row " + std::to_string(i) + " sums to " +
                std::to_string(sum));
    require(row[i] == 0, ErrorCode::kInvalidArgument,
            "synth: self-transitions must be 0; durations are geometric");
  }
}

std::vector<std::vector<double>> SynthConfig::transition_matrix() const {
  if (!transitions.empty()) return transitions;
  std::vector<std::vector<double>> t(classes, std::vector<double>(classes));
  for (std::size_t i = 0; i < classes; ++i)
    for (std::size_t j = 0; j < classes; ++j)
      t[i][j] = i == j ? 0.0 : 1.0 / static_cast<double>(classes - 1);
  return t;
}

std::size_t sample_duration(double mean, Rng& rng) {
  require(mean >= 1.0, ErrorCode::kInvalidArgument,
          "mean duration must be >= 1");
  if (mean == 1.0) return 1;
  const double q = 1.0 - 1.0 / mean;  // failure probability
  const double u = 1.0 - uniform01(rng);  // (0, 1]
  return 1 + static_cast<std::size_t>(std::floor(std::log(u) / std::log(q)));
}

std::vector<std::vector<float>> class_means(const SynthConfig& cfg) {
  std::vector<std::vector<float>> means(cfg.classes,
                                        std::vector<float>(cfg.dim, 0.0f));
  for (std::size_t c = 0; c < cfg.classes; ++c)
    means[c][c] = static_cast<float>(cfg.mean_scale);
  return means;
}

namespace {

std::size_t draw_next(const std::vector<double>& row, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0) continue;
    last = j;
    acc += row[j];
    if (u < acc) return j;
  }
  return last;
}

frontend::Utterance generate(const SynthConfig& cfg,
                             const std::vector<std::vector<double>>& trans,
                             const std::vector<std::vector<float>>& means,
                             std::string id, Rng& rng) {
  const std::size_t span = cfg.max_length - cfg.min_length + 1;
  const std::size_t n = cfg.min_length + uniform_index(rng, span);
  frontend::Utterance u;
  u.id = std::move(id);
  auto& f = u.features;
  f.frames = Tensor<float>::matrix(n, cfg.dim);
  f.label_classes = static_cast<std::uint16_t>(cfg.classes);
  f.labels.resize(n);
  std::size_t cls = uniform_index(rng, cfg.classes);
  std::size_t t = 0;
  while (t < n) {
    const std::size_t d = sample_duration(cfg.mean_duration, rng);
    for (std::size_t k = 0; k < d && t < n; ++k, ++t) {
      f.labels[t] = static_cast<std::uint16_t>(cls);
      for (std::size_t j = 0; j < cfg.dim; ++j) {
        const double noise =
            cfg.noise_scale > 0 ? cfg.noise_scale * standard_normal(rng) : 0.0;
        f.frames.at(t, j) = static_cast<float>(means[cls][j] + noise);
      }
    }
    cls = draw_next(trans[cls], rng);
  }
  return u;
}

}  // namespace

frontend::Utterance generate_utterance(const SynthConfig& cfg,
                                       std::string id, Rng& rng) {
  cfg.validate();
  return generate(cfg, cfg.transition_matrix(), class_means(cfg),
                  std::move(id), rng);
}

frontend::Corpus generate_corpus(const SynthConfig& cfg, std::size_t count) {
  cfg.validate();
  require(count > 0, ErrorCode::kInvalidArgument,
          "synth: utterance count must be positive");
  const auto trans = cfg.transition_matrix();
  const auto means = class_means(cfg);
  frontend::Corpus c;
  c.utterances.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "utt%05zu", i);
    Rng rng(derive_seed(cfg.seed, i));
    c.utterances.push_back(generate(cfg, trans, means, id, rng));
  }
  return c;
}

}  // namespace apcr::synth
