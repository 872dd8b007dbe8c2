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
#include <utility>
#include <vector>

#include "numcore/tensor.hpp"

namespace apcr::probe {

using num::Tensor;

// Frozen per-frame features (N x H) with their per-frame labels.
struct LabeledSequence {
  const Tensor<float>* features = nullptr;
  const std::vector<std::uint16_t>* labels = nullptr;
};

struct ProbeConfig {
  std::vector<int> shifts{-15, -10, -5, 0, 5, 10, 15};
  std::size_t classes = 8;
  // Optional surjection from training classes onto evaluation classes.
  std::optional<std::vector<std::uint16_t>> collapse;
  std::size_t epochs = 200;
  double learning_rate = 1e-2;
  std::size_t eval_every = 10;  // validation FER checks for model selection
  bool standardize = true;

  void validate() const;
};

// Pairs (t, label[t + w]) for every t with t + w inside the sequence,
// 0-based. Throws when |w| >= N.
std::vector<std::pair<std::size_t, std::uint16_t>> shift_labels(
    const std::vector<std::uint16_t>& labels, int w);

// Multinomial logistic regression on standardized features.
struct LinearClassifier {
  std::size_t classes = 0;
  std::size_t dim = 0;
  Tensor<double> weights;  // C x H
  std::vector<double> bias;
  std::vector<double> mean, inv_std;  // input standardization

  static LinearClassifier zeros(std::size_t classes, std::size_t dim);
  std::vector<double> logits(const float* row) const;
  std::vector<double> probabilities(const float* row) const;
  // Lowest index wins ties.
  std::size_t predict(const float* row) const;
};

struct FerResult {
  std::size_t errors = 0;
  std::size_t total = 0;
  double fer() const {
    return total ? static_cast<double>(errors) / static_cast<double>(total)
                 : 0.0;
  }
};

// Full-batch Adam on mean softmax cross-entropy, from zero weights. When
// `validation` is non-empty the weights with the lowest validation FER
// (checked every eval_every epochs and after the last) are returned.
LinearClassifier train_probe(const std::vector<LabeledSequence>& train,
                             const std::vector<LabeledSequence>& validation,
                             int shift, const ProbeConfig& cfg);

FerResult evaluate_fer(const LinearClassifier& classifier,
                       const std::vector<LabeledSequence>& data, int shift,
                       const std::optional<std::vector<std::uint16_t>>& collapse);

// Whitespace-separated "src dst" pairs, one per line; must cover [0, C)
// exactly once.
std::vector<std::uint16_t> parse_collapse_map(const std::string& text,
                                              std::size_t classes);
std::vector<std::uint16_t> read_collapse_map(const std::string& path,
                                             std::size_t classes);
void check_collapse_map(const std::vector<std::uint16_t>& map,
                        std::size_t classes);

struct ReportRow {
  std::string source;
  std::vector<FerResult> per_shift;  // aligned with ProbeConfig::shifts
};

struct ProbeSource {
  std::string name;
  std::vector<LabeledSequence> train, validation, test;
};

// One probe per (source, shift); test FER per cell.
std::vector<ReportRow> run_probe_report(const std::vector<ProbeSource>& sources,
                                        const ProbeConfig& cfg);

// Header "features,-15,...,+15"; cells are FER percentages to one decimal.
std::string format_report_csv(const std::vector<ReportRow>& rows,
                              const std::vector<int>& shifts);

}  // namespace apcr::probe
