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
#include <span>
#include <string_view>
#include <vector>

#include "common/rng.hpp"
#include "model/encoder.hpp"
#include "objectives/config.hpp"

namespace apcr {

using num::Tape;
using num::Tensor;
using num::Var;

// Anchor positions use the 1-based frame convention: an anchor a defines
// the past window x_{a-s} .. x_{a-s+l-1} with targets n frames later.
struct AnchorSet {
  std::vector<std::size_t> positions;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool operator==(const AnchorSet&) const = default;
};

// a - s >= 1 and a - s + l - 1 + n <= N
bool anchor_eligible(std::size_t anchor, std::size_t length,
                     const ObjectiveConfig& cfg);

// Selects each eligible frame independently with probability P.
AnchorSet sample_anchors(std::size_t length, const ObjectiveConfig& cfg,
                         Rng& rng);

// Deterministic anchors for validation: every ceil(1/P)-th eligible frame,
// starting at the first eligible one. Empty when P == 0.
AnchorSet strided_anchors(std::size_t length, const ObjectiveConfig& cfg);

// Per-utterance anchor stream; independent of batch composition.
Rng anchor_stream(std::uint64_t seed, std::uint64_t epoch,
                  std::string_view utterance_id);

struct L1Value {
  double sum = 0;
  double mean = 0;
  std::size_t terms = 0;
};

// Elementwise L1 distance between aligned prediction and target rows.
template <typename T>
L1Value compute_lf(const Tensor<T>& predictions, const Tensor<T>& targets) {
  require(!predictions.empty(), ErrorCode::kInvalidArgument,
          "compute_lf: no predictable frames");
  require(predictions.same_shape(targets), ErrorCode::kDimensionMismatch,
          "compute_lf: predictions " + num::shape_string(predictions.shape()) +
              " vs targets " + num::shape_string(targets.shape()));
  L1Value out;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    out.sum += std::abs(static_cast<double>(predictions[i]) -
                        static_cast<double>(targets[i]));
  out.terms = predictions.size();
  out.mean = out.sum / static_cast<double>(out.terms);
  return out;
}

// Aligns predictions y_1..y_{N-n} (the first N-n rows of `predictions`)
// with x_{1+n}..x_N.
template <typename T>
L1Value compute_lf_shifted(const Tensor<T>& predictions,
                           const Tensor<T>& frames, std::size_t horizon) {
  const std::size_t n = frames.rows(), d = frames.cols();
  require(n > horizon, ErrorCode::kInvalidArgument,
          "compute_lf: utterance of " + std::to_string(n) +
              " frames has nothing to predict at horizon " +
              std::to_string(horizon));
  require(predictions.rows() >= n - horizon && predictions.cols() == d,
          ErrorCode::kDimensionMismatch, "compute_lf: prediction shape");
  std::vector<T> p(predictions.data(), predictions.data() + (n - horizon) * d);
  std::vector<T> t(frames.data() + horizon * d, frames.data() + n * d);
  return compute_lf(Tensor<T>({n - horizon, d}, std::move(p)),
                    Tensor<T>({n - horizon, d}, std::move(t)));
}

// Loss values for one batch or utterance. Means are per frame and per
// dimension; sums are the raw L1 totals.
struct LossBreakdown {
  double lf_sum = 0;
  double lf = 0;
  double lr_sum = 0;
  double lr = 0;
  double lm = 0;
  std::size_t anchors = 0;
  std::size_t lf_terms = 0;
  std::size_t lr_terms = 0;
  std::size_t predicted_frames = 0;
};

inline double combined_loss(double lf, double lr, double lambda) {
  return lf + lambda * lr;
}

// Zero-padded, time-major block: row t*batch + b holds frame t of
// utterance b.
template <typename T>
struct PaddedBatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t dim = 0;
  Tensor<T> frames;
  std::vector<std::size_t> lengths;

  static PaddedBatch from(std::span<const Tensor<T>* const> utterances,
                          std::size_t min_steps = 0) {
    require(!utterances.empty(), ErrorCode::kInvalidArgument,
            "batch: no utterances");
    PaddedBatch b;
    b.batch = utterances.size();
    b.dim = utterances.front()->cols();
    b.steps = min_steps;
    for (const Tensor<T>* u : utterances) {
      require(u->cols() == b.dim, ErrorCode::kDimensionMismatch,
              "batch: utterances disagree on feature dimension");
      b.lengths.push_back(u->rows());
      b.steps = std::max(b.steps, u->rows());
    }
    b.frames = Tensor<T>::matrix(b.steps * b.batch, b.dim);
    for (std::size_t i = 0; i < b.batch; ++i)
      for (std::size_t t = 0; t < b.lengths[i]; ++t)
        std::copy_n(utterances[i]->data() + t * b.dim, b.dim,
                    b.frames.data() + (t * b.batch + i) * b.dim);
    return b;
  }

  bool valid(std::size_t b, std::size_t t) const { return t < lengths[b]; }

  std::vector<std::uint8_t> mask() const {
    std::vector<std::uint8_t> m(batch * steps);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t t = 0; t < steps; ++t) m[b * steps + t] = valid(b, t);
    return m;
  }

  const T* frame(std::size_t b, std::size_t t) const {
    return frames.data() + (t * batch + b) * dim;
  }
};

template <typename T>
struct BatchObjective {
  Var<T> loss;
  LossBreakdown breakdown;
};

// Builds L_m = L_f + lambda * L_r for a padded batch on the tape.
//
// L_f is the L1 distance between W*h_t and x_{t+n} over every valid
// position, divided by the number of terms. L_r runs the shared auxiliary
// stack over each anchor's past window starting from the main stack's
// states at the anchor, projects with W_aux, and averages the per-window
// means over all anchors in the batch (0 when there are none).
//
// The L_r term enters `loss` only when `optimize_lr` is set and lambda > 0;
// it is always evaluated for reporting.
template <typename T>
BatchObjective<T> build_objective(const model::EncoderVars<T>& vars,
                                  const PaddedBatch<T>& batch,
                                  std::span<const AnchorSet> anchors,
                                  const ObjectiveConfig& cfg,
                                  bool optimize_lr) {
  cfg.validate();
  require(anchors.size() == batch.batch, ErrorCode::kInvalidArgument,
          "build_objective: one anchor set per utterance required");
  Tape<T>& tape = *vars.proj.tape;
  const std::size_t B = batch.batch, D = batch.dim, n = cfg.horizon;
  for (std::size_t b = 0; b < B; ++b) {
    require(batch.lengths[b] > n, ErrorCode::kInvalidArgument,
            "utterance of " + std::to_string(batch.lengths[b]) +
                " frames has no predictable frames at horizon " +
                std::to_string(n));
  }
  require(vars.proj.value().rows() == D, ErrorCode::kDimensionMismatch,
          "build_objective: model projects to " +
              std::to_string(vars.proj.value().rows()) +
              " dims but frames have " + std::to_string(D));

  BatchObjective<T> out;
  LossBreakdown& bd = out.breakdown;

  Var<T> inputs = tape.constant(batch.frames);
  auto main = model::stack_forward(vars.main, inputs, batch.steps, B);

  // Future prediction over rows t < steps - n.
  const std::size_t pred_steps = batch.steps - n;
  Var<T> top = num::slice_rows(main.outputs.back(), 0, pred_steps * B);
  Var<T> y = model::project(top, vars.proj, vars.proj_bias);
  Tensor<T> targets = Tensor<T>::matrix(pred_steps * B, D);
  std::vector<T> weights(pred_steps * B, T(0));
  for (std::size_t t = 0; t < pred_steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      if (t + n >= batch.lengths[b]) continue;
      weights[t * B + b] = T(1);
      std::copy_n(batch.frame(b, t + n), D, targets.data() + (t * B + b) * D);
      bd.predicted_frames += 1;
    }
  }
  bd.lf_terms = bd.predicted_frames * D;
  Var<T> lf_sum = num::weighted_l1(y, std::move(targets), std::move(weights));
  Var<T> lf = num::scale(lf_sum, T(1) / static_cast<T>(bd.lf_terms));
  bd.lf_sum = lf_sum.value()[0];
  bd.lf = lf.value()[0];

  // Past-window reconstruction from every anchor in the batch.
  std::vector<std::pair<std::size_t, std::size_t>> windows;  // (b, a0)
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t a : anchors[b].positions) {
      require(anchor_eligible(a, batch.lengths[b], cfg), ErrorCode::kState,
              "anchor " + std::to_string(a) + " violates eligibility for an "
              "utterance of " + std::to_string(batch.lengths[b]) + " frames");
      windows.emplace_back(b, a - 1);
    }
  }
  const std::size_t M = windows.size(), L = cfg.past_length;
  std::optional<Var<T>> lr;
  if (M > 0) {
    const std::size_t layers = vars.main.layers.size();
    std::vector<Var<T>> seeds;
    for (std::size_t k = 0; k < layers; ++k) {
      const std::size_t src_layer =
          cfg.seed_mode == SeedMode::kPerLayer ? k : layers - 1;
      std::vector<std::pair<Var<T>, std::size_t>> rows;
      rows.reserve(M);
      for (auto [b, a0] : windows)
        rows.emplace_back(main.steps[src_layer][a0], b);
      seeds.push_back(num::gather_rows(rows));
    }
    Tensor<T> source = Tensor<T>::matrix(L * M, D);
    Tensor<T> target = Tensor<T>::matrix(L * M, D);
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t m = 0; m < M; ++m) {
        auto [b, a0] = windows[m];
        const std::size_t first = a0 - cfg.past_offset + j;
        std::copy_n(batch.frame(b, first), D, source.data() + (j * M + m) * D);
        std::copy_n(batch.frame(b, first + n), D,
                    target.data() + (j * M + m) * D);
      }
    }
    auto aux = model::stack_forward(vars.aux, tape.constant(std::move(source)),
                                    L, M, seeds);
    Var<T> y_aux =
        model::project(aux.outputs.back(), vars.aux_proj, vars.aux_proj_bias);
    Var<T> lr_sum =
        num::weighted_l1(y_aux, std::move(target), std::vector<T>(L * M, T(1)));
    bd.lr_terms = L * M * D;
    lr = num::scale(lr_sum, T(1) / static_cast<T>(bd.lr_terms));
    bd.lr_sum = lr_sum.value()[0];
    bd.lr = lr->value()[0];
  }
  bd.anchors = M;
  bd.lm = combined_loss(bd.lf, bd.lr, cfg.lambda);

  if (optimize_lr && lr && cfg.lambda > 0) {
    out.loss = lf + num::scale(*lr, static_cast<T>(cfg.lambda));
  } else {
    out.loss = lf;
  }
  return out;
}

// Single-utterance evaluation with explicit anchors.
template <typename T>
LossBreakdown compute_lm(const model::EncoderParams<T>& params,
                         const Tensor<T>& frames, const ObjectiveConfig& cfg,
                         const AnchorSet& anchors) {
  Tape<T> tape;
  auto vars = model::bind(tape, params, /*differentiable=*/false);
  const Tensor<T>* u = &frames;
  auto batch = PaddedBatch<T>::from(std::span<const Tensor<T>* const>(&u, 1));
  return build_objective<T>(vars, batch, std::span<const AnchorSet>(&anchors, 1),
                            cfg, true)
      .breakdown;
}

// Single-utterance evaluation with anchors sampled from `rng`.
template <typename T>
LossBreakdown compute_lm(const model::EncoderParams<T>& params,
                         const Tensor<T>& frames, const ObjectiveConfig& cfg,
                         Rng& rng) {
  return compute_lm(params, frames, cfg, sample_anchors(frames.rows(), cfg, rng));
}

template <typename T>
double compute_lr(const model::EncoderParams<T>& params,
                  const Tensor<T>& frames, const ObjectiveConfig& cfg,
                  const AnchorSet& anchors) {
  return compute_lm(params, frames, cfg, anchors).lr;
}

}  // namespace apcr
