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

#include "trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "common/binary_io.hpp"

namespace apcr::trainer {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  require(epochs > 0, ErrorCode::kInvalidArgument, "epochs must be positive");
  require(batch_size > 0, ErrorCode::kInvalidArgument,
          "batch size must be positive");
  require(learning_rate > 0 && std::isfinite(learning_rate),
          ErrorCode::kInvalidArgument, "learning rate must be positive");
  require(clip_norm >= 0, ErrorCode::kInvalidArgument,
          "clip norm must be >= 0");
  require(validation_fraction > 0 && validation_fraction < 1,
          ErrorCode::kInvalidArgument,
          "validation fraction must lie in (0, 1)");
  require(encoder.layers > 0 && encoder.hidden > 0 && encoder.feature_dim > 0,
          ErrorCode::kInvalidArgument, "encoder sizes must be positive");
  objective_cfg.validate();
}

std::size_t PreparedCorpus::total_frames() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.rows();
  return n;
}

PreparedCorpus prepare(const frontend::Corpus& corpus,
                       const model::Normalizer& normalizer) {
  PreparedCorpus p;
  for (const auto& u : corpus.utterances) {
    p.ids.push_back(u.id);
    p.frames.push_back(normalizer.apply(u.features.frames));
  }
  return p;
}

std::vector<std::vector<std::size_t>> plan_batches(
    std::span<const std::size_t> lengths, std::size_t batch_size,
    std::uint64_t seed, std::uint64_t epoch) {
  require(!lengths.empty(), ErrorCode::kInvalidArgument,
          "make_batches: empty corpus");
  require(batch_size > 0, ErrorCode::kInvalidArgument,
          "make_batches: batch size must be positive");
  Rng rng(derive_seed(seed, epoch, 0xba7c4e5ULL));
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  portable_shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return lengths[a] < lengths[b];
  });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    const std::size_t end = std::min(order.size(), i + batch_size);
    groups.emplace_back(order.begin() + i, order.begin() + end);
  }
  portable_shuffle(groups.begin(), groups.end(), rng);
  return groups;
}

namespace {

Batch materialize(const PreparedCorpus& corpus,
                  std::vector<std::size_t> indices) {
  std::vector<const Tensor<float>*> ptrs;
  for (auto i : indices) ptrs.push_back(&corpus.frames[i]);
  return Batch{std::move(indices), PaddedBatch<float>::from(ptrs)};
}

}  // namespace

std::vector<Batch> make_batches(const PreparedCorpus& corpus,
                                std::size_t batch_size, std::uint64_t seed,
                                std::uint64_t epoch) {
  std::vector<std::size_t> lengths;
  for (const auto& f : corpus.frames) lengths.push_back(f.rows());
  std::vector<Batch> out;
  for (auto& g : plan_batches(lengths, batch_size, seed, epoch))
    out.push_back(materialize(corpus, std::move(g)));
  return out;
}

void EpochStats::add(const LossBreakdown& b, std::size_t utts) {
  lf_sum += b.lf_sum;
  lr_sum += b.lr_sum;
  lf_terms += b.lf_terms;
  lr_terms += b.lr_terms;
  anchors += b.anchors;
  utterances += utts;
}

double EpochStats::lf_mean() const {
  return lf_terms ? lf_sum / static_cast<double>(lf_terms) : 0.0;
}
double EpochStats::lr_mean() const {
  return lr_terms ? lr_sum / static_cast<double>(lr_terms) : 0.0;
}
double EpochStats::lm_mean(double lambda) const {
  return combined_loss(lf_mean(), lr_mean(), lambda);
}
double EpochStats::lf_sum_per_utt() const {
  return utterances ? lf_sum / static_cast<double>(utterances) : 0.0;
}
double EpochStats::anchors_per_utt() const {
  return utterances ? static_cast<double>(anchors) /
                          static_cast<double>(utterances)
                    : 0.0;
}

namespace {

void clip_gradients(std::vector<Tensor<float>>& grads, double max_norm) {
  if (max_norm <= 0) return;
  double sq = 0;
  for (const auto& g : grads)
    for (float v : g.storage()) sq += double(v) * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const float scale = static_cast<float>(max_norm / norm);
  for (auto& g : grads)
    for (float& v : g.storage()) v *= scale;
}

std::string describe_batch(const PreparedCorpus& corpus, const Batch& b) {
  std::string s;
  for (std::size_t i = 0; i < b.indices.size() && i < 4; ++i) {
    if (i) s += ",";
    s += corpus.ids[b.indices[i]];
  }
  if (b.indices.size() > 4) s += ",...";
  return s;
}

}  // namespace

EpochStats train_epoch(TrainState& state, const PreparedCorpus& corpus,
                       const TrainConfig& cfg, std::uint64_t epoch) {
  const bool with_lr = cfg.objective == Objective::kLm;
  const auto batches = make_batches(corpus, cfg.batch_size, cfg.seed, epoch);
  EpochStats stats;
  auto tensors = state.params.tensors();
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    const Batch& batch = batches[bi];
    std::vector<AnchorSet> anchors(batch.indices.size());
    if (with_lr) {
      for (std::size_t i = 0; i < batch.indices.size(); ++i) {
        const auto u = batch.indices[i];
        Rng rng = anchor_stream(cfg.seed, epoch, corpus.ids[u]);
        anchors[i] =
            sample_anchors(corpus.frames[u].rows(), cfg.objective_cfg, rng);
      }
    }
    Tape<float> tape;
    auto vars = model::bind(tape, state.params, true);
    auto obj = build_objective<float>(vars, batch.data, anchors,
                                      cfg.objective_cfg, with_lr);
    const float loss = obj.loss.value()[0];
    require(std::isfinite(loss) && std::isfinite(obj.breakdown.lr),
            ErrorCode::kNonFinite,
            "non-finite loss in epoch " + std::to_string(epoch + 1) +
                ", batch " + std::to_string(bi) + " (" +
                describe_batch(corpus, batch) + ")");
    auto grads = num::reverse_gradients<float>(tape, obj.loss, vars.leaves);
    clip_gradients(grads, cfg.clip_norm);
    num::adam_step<float>(state.adam, tensors, grads);
    stats.add(obj.breakdown, batch.indices.size());
  }
  return stats;
}

EpochStats validate(const model::EncoderParams<float>& params,
                    const PreparedCorpus& corpus, const TrainConfig& cfg) {
  require(corpus.size() > 0, ErrorCode::kInvalidArgument,
          "validate: empty validation corpus");
  // Fixed order: sorted by length (ties by position) to limit padding.
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
    return corpus.frames[a].rows() < corpus.frames[b].rows();
  });
  EpochStats stats;
  for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
    std::vector<std::size_t> idx(order.begin() + i,
                                 order.begin() + std::min(order.size(),
                                                          i + cfg.batch_size));
    std::vector<AnchorSet> anchors;
    for (auto u : idx)
      anchors.push_back(
          strided_anchors(corpus.frames[u].rows(), cfg.objective_cfg));
    Batch batch = materialize(corpus, std::move(idx));
    Tape<float> tape;
    auto vars = model::bind(tape, params, false);
    auto obj = build_objective<float>(vars, batch.data, anchors,
                                      cfg.objective_cfg, true);
    stats.add(obj.breakdown, batch.indices.size());
  }
  return stats;
}

MetricsRow to_row(std::uint32_t epoch, std::string split,
                  const EpochStats& stats, double lambda,
                  double wall_seconds) {
  MetricsRow r;
  r.epoch = epoch;
  r.split = std::move(split);
  r.lf_sum = stats.lf_sum_per_utt();
  r.lf_mean = stats.lf_mean();
  r.lr_mean = stats.lr_mean();
  r.lm_mean = stats.lm_mean(lambda);
  r.anchors_per_utt = stats.anchors_per_utt();
  r.wall_seconds = wall_seconds;
  return r;
}

std::string metrics_header() {
  return "epoch,split,L_f_sum,L_f_mean,L_r_mean,L_m_mean,anchors_per_utt,"
         "wall_seconds";
}

std::string format_row(const MetricsRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%u,%s,%.9g,%.9g,%.9g,%.9g,%.6g,%.3f",
                r.epoch, r.split.c_str(), r.lf_sum, r.lf_mean, r.lr_mean,
                r.lm_mean, r.anchors_per_utt, r.wall_seconds);
  return buf;
}

model::Checkpoint initial_checkpoint(const frontend::Corpus& train,
                                     const TrainConfig& cfg) {
  cfg.validate();
  require(!train.empty(), ErrorCode::kInvalidArgument,
          "training corpus is empty");
  require(train.dim() == cfg.encoder.feature_dim,
          ErrorCode::kDimensionMismatch,
          "corpus has D = " + std::to_string(train.dim()) +
              " but the model expects " +
              std::to_string(cfg.encoder.feature_dim));
  std::vector<const Tensor<float>*> ptrs;
  for (const auto& u : train.utterances) ptrs.push_back(&u.features.frames);
  model::Checkpoint c;
  c.objective = cfg.objective_cfg;
  c.init_seed = derive_seed(cfg.seed, 0x1417ULL);
  c.normalizer = model::Normalizer::fit(ptrs);
  c.params = model::EncoderParams<float>::initialized(cfg.encoder, c.init_seed);
  model::TrainingBlock t;
  t.objective = cfg.objective;
  t.seed = cfg.seed;
  t.epochs = static_cast<std::uint32_t>(cfg.epochs);
  t.batch_size = static_cast<std::uint32_t>(cfg.batch_size);
  t.learning_rate = static_cast<float>(cfg.learning_rate);
  t.clip_norm = static_cast<float>(cfg.clip_norm);
  t.adam = num::AdamState<float>::for_params(
      std::span<const Tensor<float>* const>(c.params.tensors()),
      static_cast<float>(cfg.learning_rate));
  c.training = std::move(t);
  return c;
}

namespace {

void check_resumable(const model::Checkpoint& c, const TrainConfig& cfg) {
  require(c.training.has_value(), ErrorCode::kState,
          "checkpoint has no optimizer state; cannot resume");
  const auto& t = *c.training;
  const bool same =
      t.objective == cfg.objective && t.seed == cfg.seed &&
      t.batch_size == cfg.batch_size &&
      t.learning_rate == static_cast<float>(cfg.learning_rate) &&
      t.clip_norm == static_cast<float>(cfg.clip_norm) &&
      c.objective == cfg.objective_cfg && c.params.config == cfg.encoder;
  require(same, ErrorCode::kState,
          "checkpoint was trained with a different configuration; refusing "
          "to resume");
}

std::vector<std::string> read_metrics_rows(const fs::path& path,
                                           std::uint32_t up_to_epoch) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    if (std::stoul(line.substr(0, line.find(','))) <= up_to_epoch)
      rows.push_back(line);
  }
  return rows;
}

void write_metrics(const fs::path& path, const std::vector<std::string>& rows) {
  std::string text = metrics_header() + "\n";
  for (const auto& r : rows) text += r + "\n";
  write_file(path.string(),
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                       text.size()));
}

}  // namespace

PretrainResult pretrain(const frontend::Corpus& train,
                        const frontend::Corpus* validation,
                        const TrainConfig& cfg,
                        const PretrainOptions& options) {
  cfg.validate();
  require(!options.out_dir.empty(), ErrorCode::kInvalidArgument,
          "pretrain: output directory required");
  require(!train.empty(), ErrorCode::kInvalidArgument,
          "pretrain: training corpus is empty");
  require(train.dim() == cfg.encoder.feature_dim,
          ErrorCode::kDimensionMismatch,
          "corpus has D = " + std::to_string(train.dim()) +
              " but the model expects " +
              std::to_string(cfg.encoder.feature_dim));
  frontend::Corpus train_split, val_split;
  if (validation) {
    train_split = train;
    val_split = *validation;
  } else {
    std::tie(train_split, val_split) =
        frontend::split_by_hash(train, cfg.validation_fraction);
  }
  require(!train_split.empty(), ErrorCode::kInvalidArgument,
          "pretrain: training split is empty");
  require(!val_split.empty(), ErrorCode::kInvalidArgument,
          "pretrain: validation split is empty");
  require(val_split.dim() == train_split.dim(), ErrorCode::kDimensionMismatch,
          "pretrain: validation corpus D differs from training corpus");

  const fs::path out(options.out_dir);
  const fs::path last_path = out / "last.ckpt", best_path = out / "best.ckpt",
                 metrics_path = out / "metrics.csv";
  model::Checkpoint ckpt;
  std::vector<std::string> rows;
  double best = INFINITY;
  if (options.resume && fs::exists(last_path)) {
    ckpt = model::load_checkpoint(last_path.string(), train_split.dim());
    check_resumable(ckpt, cfg);
    ckpt.training->epochs = static_cast<std::uint32_t>(cfg.epochs);
    rows = read_metrics_rows(metrics_path, ckpt.training->epochs_done);
    for (const auto& r : rows) {
      // epoch,split,L_f_sum,L_f_mean,...
      std::stringstream ss(r);
      std::string field[4];
      for (auto& f : field) std::getline(ss, f, ',');
      if (field[1] == "val") best = std::min(best, std::stod(field[3]));
    }
  } else {
    ckpt = initial_checkpoint(train_split, cfg);
  }
  fs::create_directories(out);

  const auto train_data = prepare(train_split, ckpt.normalizer);
  const auto val_data = prepare(val_split, ckpt.normalizer);
  TrainState state{ckpt.params, ckpt.training->adam};
  const double lambda = cfg.objective_cfg.lambda;

  PretrainResult result;
  for (std::uint32_t e = ckpt.training->epochs_done; e < cfg.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto tr = train_epoch(state, train_data, cfg, e);
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const auto va = validate(state.params, val_data, cfg);
    const double total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const auto train_row = to_row(e + 1, "train", tr, lambda, train_seconds);
    const auto val_row = to_row(e + 1, "val", va, lambda, total_seconds);
    rows.push_back(format_row(train_row));
    rows.push_back(format_row(val_row));
    if (options.on_row) {
      options.on_row(train_row);
      options.on_row(val_row);
    }

    ckpt.params = state.params;
    ckpt.training->adam = state.adam;
    ckpt.training->epochs_done = e + 1;
    model::save_checkpoint(last_path.string(), ckpt);
    if (va.lf_mean() < best) {
      best = va.lf_mean();
      model::save_checkpoint(best_path.string(), ckpt);
    }
    write_metrics(metrics_path, rows);
  }
  if (rows.empty() || !fs::exists(metrics_path)) write_metrics(metrics_path, rows);
  result.final_validation = validate(state.params, val_data, cfg);
  result.best_validation_lf =
      std::isfinite(best) ? best : result.final_validation.lf_mean();
  result.last = std::move(ckpt);
  return result;
}

}  // namespace apcr::trainer
