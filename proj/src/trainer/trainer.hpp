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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "frontend/corpus.hpp"
#include "model/checkpoint.hpp"
#include "objectives/objectives.hpp"

namespace apcr::trainer {

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  Objective objective = Objective::kLm;
  ObjectiveConfig objective_cfg;
  model::EncoderConfig encoder;
  std::uint64_t seed = 1;
  double clip_norm = 0;  // 0 = off
  // Held-out share of the training corpus when no validation corpus is
  // given, selected by stable hash of the utterance id.
  double validation_fraction = 0.05;

  void validate() const;
};

// Normalized frames with their ids, ready for batching.
struct PreparedCorpus {
  std::vector<std::string> ids;
  std::vector<Tensor<float>> frames;

  std::size_t size() const { return frames.size(); }
  std::size_t total_frames() const;
};

PreparedCorpus prepare(const frontend::Corpus& corpus,
                       const model::Normalizer& normalizer);

struct Batch {
  std::vector<std::size_t> indices;  // into the prepared corpus
  PaddedBatch<float> data;
};

// Index groups for one epoch: shuffle by (seed, epoch), stable-sort by
// length so each group holds similar lengths, cut into groups of
// batch_size, then shuffle the group order.
std::vector<std::vector<std::size_t>> plan_batches(
    std::span<const std::size_t> lengths, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch);

std::vector<Batch> make_batches(const PreparedCorpus& corpus,
                                std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch);

// Frame-weighted epoch aggregate.
struct EpochStats {
  double lf_sum = 0;     // raw L1 sum, summed over utterances
  double lr_sum = 0;
  std::size_t lf_terms = 0;
  std::size_t lr_terms = 0;
  std::size_t anchors = 0;
  std::size_t utterances = 0;

  void add(const LossBreakdown& b, std::size_t utts);
  double lf_mean() const;
  double lr_mean() const;
  double lm_mean(double lambda) const;
  double lf_sum_per_utt() const;
  double anchors_per_utt() const;
};

struct TrainState {
  model::EncoderParams<float> params;
  num::AdamState<float> adam;
};

// One Adam update per batch on the configured objective. Anchors for
// utterance u come from anchor_stream(seed, epoch, id_u). Throws
// kNonFinite naming the batch if a loss is not finite.
EpochStats train_epoch(TrainState& state, const PreparedCorpus& corpus,
                       const TrainConfig& cfg, std::uint64_t epoch);

// No updates; strided anchors; L_r is always evaluated.
EpochStats validate(const model::EncoderParams<float>& params,
                    const PreparedCorpus& corpus, const TrainConfig& cfg);

struct MetricsRow {
  std::uint32_t epoch = 0;
  std::string split;
  double lf_sum = 0, lf_mean = 0, lr_mean = 0, lm_mean = 0;
  double anchors_per_utt = 0;
  double wall_seconds = 0;
};

MetricsRow to_row(std::uint32_t epoch, std::string split,
                  const EpochStats& stats, double lambda, double wall_seconds);
std::string metrics_header();
std::string format_row(const MetricsRow& row);

struct PretrainOptions {
  std::string out_dir;
  bool resume = false;
  std::function<void(const MetricsRow&)> on_row;  // progress callback
};

struct PretrainResult {
  model::Checkpoint last;
  EpochStats final_validation;
  double best_validation_lf = 0;
};

// Full pretraining driver. Writes <out>/metrics.csv, <out>/last.ckpt
// (with optimizer state) and <out>/best.ckpt (lowest validation L_f).
// With resume set and <out>/last.ckpt present, training continues from it.
PretrainResult pretrain(const frontend::Corpus& train,
                        const frontend::Corpus* validation,
                        const TrainConfig& cfg, const PretrainOptions& options);

model::Checkpoint initial_checkpoint(const frontend::Corpus& train,
                                     const TrainConfig& cfg);

}  // namespace apcr::trainer
