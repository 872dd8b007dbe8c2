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

#include <gtest/gtest.h>

#include <cmath>

#include "numcore/gradcheck.hpp"
#include "objectives/objectives.hpp"
#include "reference_encoder.hpp"

namespace apcr {
namespace {

using model::EncoderConfig;
using model::EncoderParams;

Tensor<double> random_frames(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> t = Tensor<double>::matrix(n, d);
  for (auto& v : t.storage()) v = 2 * uniform01(rng) - 1;
  return t;
}

EncoderConfig tiny(std::size_t layers = 3, std::size_t hidden = 8,
                   std::size_t dim = 6) {
  EncoderConfig c;
  c.layers = layers;
  c.hidden = hidden;
  c.feature_dim = dim;
  return c;
}

ObjectiveConfig window_cfg(std::size_t n, std::size_t s, std::size_t l,
                           double p = 1.0, double lambda = 0.1) {
  ObjectiveConfig c;
  c.horizon = n;
  c.past_offset = s;
  c.past_length = l;
  c.anchor_probability = p;
  c.lambda = lambda;
  return c;
}

// Brute-force predicate from the window definition, 1-based.
bool eligible_by_definition(long a, long N, const ObjectiveConfig& c) {
  const long s = static_cast<long>(c.past_offset);
  const long l = static_cast<long>(c.past_length);
  const long n = static_cast<long>(c.horizon);
  return a - s >= 1 && a - s + l - 1 + n <= N;
}

TEST(ComputeLf, PerfectPredictionIsZero) {
  auto x = random_frames(4, 3, 1);
  EXPECT_EQ(compute_lf(x, x).sum, 0.0);
}

TEST(ComputeLf, HandSum) {
  Tensor<double> frames({4, 1}, {0, 1, 2, 3});
  Tensor<double> predictions({3, 1}, {1, 1, 1});
  auto v = compute_lf_shifted(predictions, frames, 1);
  EXPECT_EQ(v.sum, 3.0);
  EXPECT_EQ(v.mean, 1.0);
}

TEST(ComputeLf, MatchesScalarAccumulation) {
  auto p = random_frames(5, 3, 2), t = random_frames(5, 3, 3);
  double expected = 0;
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) expected += std::abs(t.at(r, c) - p.at(r, c));
  EXPECT_NEAR(compute_lf(p, t).sum, expected, 1e-14);
  EXPECT_GE(compute_lf(p, t).sum, 0.0);
}

TEST(ComputeLf, Errors) {
  auto frames = random_frames(3, 2, 1);
  EXPECT_THROW(compute_lf_shifted(random_frames(3, 2, 2), frames, 3), Error);
  EXPECT_THROW(compute_lf(random_frames(3, 2, 2), random_frames(2, 2, 2)),
               Error);
}

TEST(SampleAnchors, ZeroProbabilityGivesNone) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i)
    EXPECT_TRUE(sample_anchors(50, window_cfg(1, 7, 3, 0.0), rng).empty());
}

TEST(SampleAnchors, WindowBeyondUtteranceGivesNone) {
  Rng rng(1);
  EXPECT_TRUE(sample_anchors(10, window_cfg(1, 20, 3, 1.0), rng).empty());
}

TEST(SampleAnchors, FullProbabilityMatchesEnumeratedPredicate) {
  const auto cfg = window_cfg(1, 7, 3, 1.0);
  std::vector<std::size_t> expected;
  for (long a = 1; a <= 30; ++a)
    if (eligible_by_definition(a, 30, cfg)) expected.push_back(a);
  ASSERT_EQ(expected.size(), 23u);
  EXPECT_EQ(expected.front(), 8u);
  EXPECT_EQ(expected.back(), 30u);
  Rng rng(5);
  EXPECT_EQ(sample_anchors(30, cfg, rng).positions, expected);
}

TEST(SampleAnchors, PredicateAgreesWithDefinitionEverywhere) {
  for (std::size_t n : {1u, 5u, 9u})
    for (std::size_t s : {7u, 14u, 20u})
      for (std::size_t l : {3u, 7u})
        for (long N = 1; N <= 40; ++N)
          for (long a = 0; a <= N + 1; ++a) {
            auto cfg = window_cfg(n, s, l);
            ASSERT_EQ(anchor_eligible(a, N, cfg),
                      eligible_by_definition(a, N, cfg) && a >= 1 && a <= N);
          }
}

TEST(SampleAnchors, EligibilityAndRateOverManyDraws) {
  const auto cfg = window_cfg(1, 7, 3, 0.15);
  const std::size_t N = 200;
  std::size_t eligible = 0;
  for (std::size_t a = 1; a <= N; ++a) eligible += anchor_eligible(a, N, cfg);
  Rng rng(2024);
  std::size_t selected = 0, violations = 0;
  const std::size_t draws = 10000;
  for (std::size_t i = 0; i < draws; ++i) {
    auto set = sample_anchors(N, cfg, rng);
    for (std::size_t j = 0; j < set.size(); ++j) {
      violations += !eligible_by_definition(static_cast<long>(set.positions[j]),
                                            N, cfg);
      if (j) violations += set.positions[j] <= set.positions[j - 1];
    }
    selected += set.size();
  }
  EXPECT_EQ(violations, 0u);
  const double trials = static_cast<double>(eligible * draws);
  const double rate = static_cast<double>(selected) / trials;
  const double half_width = 2.5758 * std::sqrt(0.15 * 0.85 / trials);
  EXPECT_NEAR(rate, 0.15, half_width);
}

TEST(StridedAnchors, EveryCeilInverseProbabilityEligibleFrame) {
  EXPECT_EQ(strided_anchors(30, window_cfg(1, 7, 3, 0.15)).positions,
            (std::vector<std::size_t>{8, 15, 22, 29}));
  EXPECT_EQ(strided_anchors(30, window_cfg(1, 7, 3, 1.0)).size(), 23u);
  EXPECT_TRUE(strided_anchors(30, window_cfg(1, 7, 3, 0.0)).empty());
}

TEST(AnchorStream, DependsOnlyOnSeedEpochAndId) {
  auto a = anchor_stream(1, 2, "utt1");
  auto b = anchor_stream(1, 2, "utt1");
  auto c = anchor_stream(1, 3, "utt1");
  auto d = anchor_stream(1, 2, "utt2");
  const auto va = a();
  EXPECT_EQ(va, b());
  EXPECT_NE(va, c());
  EXPECT_NE(va, d());
}

TEST(ComputeLr, NoAnchorsGivesZero) {
  auto params = EncoderParams<double>::initialized(tiny(), 1);
  auto frames = random_frames(16, 6, 1);
  auto bd = compute_lm(params, frames, window_cfg(1, 7, 3), AnchorSet{});
  EXPECT_EQ(bd.lr, 0.0);
  EXPECT_EQ(bd.anchors, 0u);
  EXPECT_EQ(bd.lm, bd.lf);
}

TEST(ComputeLr, ZeroAuxStackReducesToTargetMagnitudes) {
  auto params = EncoderParams<double>::initialized(tiny(), 2);
  for (auto& l : params.aux) l = model::GruLayer<double>::zeros(l.input_dim(), 8);
  params.aux_proj = Tensor<double>::matrix(6, 8);
  auto frames = random_frames(16, 6, 2);
  const auto cfg = window_cfg(2, 4, 3);
  const std::size_t a = 9;
  double expected = 0;
  for (std::size_t t = a - 4; t < a - 4 + 3; ++t)  // 1-based t'
    for (std::size_t d = 0; d < 6; ++d) expected += std::abs(frames.at(t + 2 - 1, d));
  expected /= 3.0 * 6.0;
  EXPECT_NEAR(compute_lr(params, frames, cfg, AnchorSet{{a}}), expected, 1e-15);
}

TEST(ComputeLr, MatchesScalarOracleAndAveragesAnchors) {
  for (auto mode : {SeedMode::kPerLayer, SeedMode::kLastLayerToAll}) {
    auto params = EncoderParams<double>::initialized(tiny(), 3);
    auto frames = random_frames(16, 6, 3);
    auto cfg = window_cfg(2, 4, 3);
    cfg.seed_mode = mode;
    const double first = testing::ref_window_loss(params, frames, 6, cfg);
    const double second = testing::ref_window_loss(params, frames, 12, cfg);
    EXPECT_NEAR(compute_lr(params, frames, cfg, AnchorSet{{6}}), first, 1e-13);
    EXPECT_NEAR(compute_lr(params, frames, cfg, AnchorSet{{6, 12}}),
                (first + second) / 2, 1e-13);
  }
}

TEST(ComputeLm, FutureLossMatchesScalarOracle) {
  auto params = EncoderParams<double>::initialized(tiny(), 4);
  auto frames = random_frames(16, 6, 4);
  auto bd = compute_lm(params, frames, window_cfg(3, 4, 3), AnchorSet{});
  EXPECT_NEAR(bd.lf, testing::ref_lf(params, frames, 3), 1e-13);
  EXPECT_EQ(bd.lf_terms, 13u * 6u);
}

TEST(ComputeLm, CombinationIdentities) {
  auto params = EncoderParams<double>::initialized(tiny(), 5);
  auto frames = random_frames(16, 6, 5);
  Rng rng(1);
  auto cfg = window_cfg(1, 4, 3, 1.0, 0.0);
  auto zero_lambda = compute_lm(params, frames, cfg, rng);
  EXPECT_GT(zero_lambda.lr, 0.0);
  EXPECT_EQ(zero_lambda.lm, zero_lambda.lf);

  cfg = window_cfg(1, 4, 3, 0.0, 0.1);
  auto no_anchors = compute_lm(params, frames, cfg, rng);
  EXPECT_EQ(no_anchors.lr, 0.0);
  EXPECT_EQ(no_anchors.lm, no_anchors.lf);

  cfg = window_cfg(1, 4, 3, 1.0, 0.1);
  auto full = compute_lm(params, frames, cfg, rng);
  EXPECT_EQ(full.lm, full.lf + 0.1 * full.lr);
  EXPECT_GE(full.lf, 0.0);
  EXPECT_GE(full.lr, 0.0);

  EXPECT_DOUBLE_EQ(combined_loss(2.0, 1.5, 0.1), 2.15);
}

TEST(ComputeLm, Errors) {
  auto params = EncoderParams<double>::initialized(tiny(), 5);
  auto cfg = window_cfg(2, 4, 3);
  EXPECT_THROW(compute_lm(params, random_frames(2, 6, 1), cfg, AnchorSet{}),
               Error);
  try {
    compute_lm(params, random_frames(16, 6, 1), cfg, AnchorSet{{3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
  }
  EXPECT_THROW(compute_lm(params, random_frames(16, 5, 1), cfg, AnchorSet{}),
               Error);
}

TEST(BuildObjective, PaddingDoesNotChangeAnyLoss) {
  auto params = EncoderParams<float>::initialized(tiny(2, 8, 6), 6);
  auto u1 = random_frames(11, 6, 1).cast<float>();
  auto u2 = random_frames(16, 6, 2).cast<float>();
  const Tensor<float>* us[] = {&u1, &u2};
  const auto cfg = window_cfg(2, 4, 3, 0.5);
  std::vector<AnchorSet> anchors{AnchorSet{{5, 9}}, AnchorSet{{7, 8, 14}}};
  auto eval = [&](std::size_t min_steps) {
    Tape<float> tape;
    auto vars = model::bind(tape, params, true);
    auto batch = PaddedBatch<float>::from(us, min_steps);
    auto obj = build_objective<float>(vars, batch, anchors, cfg, true);
    return std::make_pair(obj.breakdown,
                          reverse_gradients<float>(tape, obj.loss, vars.leaves));
  };
  auto [base, base_grads] = eval(0);
  auto [padded, padded_grads] = eval(25);
  EXPECT_EQ(base.lf_sum, padded.lf_sum);
  EXPECT_EQ(base.lf, padded.lf);
  EXPECT_EQ(base.lr, padded.lr);
  EXPECT_EQ(base.lm, padded.lm);
  EXPECT_EQ(base_grads, padded_grads);
}

TEST(BuildObjective, MaskCoversExactlyTheTrueLengths) {
  auto u1 = random_frames(3, 2, 1), u2 = random_frames(5, 2, 2);
  const Tensor<double>* us[] = {&u1, &u2};
  auto batch = PaddedBatch<double>::from(us);
  auto mask = batch.mask();
  EXPECT_EQ(std::count(mask.begin(), mask.end(), 1), 8);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(mask[t], t < 3);
    EXPECT_EQ(mask[5 + t], 1);
  }
}

// Gradients of the main stack differ between lambda = 0 and lambda > 0
// with identical anchors, so L_r reaches the encoder through the seeds.
TEST(BuildObjective, AuxiliaryLossReachesMainStack) {
  auto params = EncoderParams<double>::initialized(tiny(), 7);
  auto frames = random_frames(16, 6, 7);
  const Tensor<double>* us[] = {&frames};
  std::vector<AnchorSet> anchors{AnchorSet{{9}}};
  auto grads_for = [&](double lambda) {
    Tape<double> tape;
    auto vars = model::bind(tape, params, true);
    auto obj = build_objective<double>(vars, PaddedBatch<double>::from(us),
                                       anchors, window_cfg(2, 4, 3, 1.0, lambda),
                                       true);
    return reverse_gradients<double>(tape, obj.loss, vars.leaves);
  };
  auto g0 = grads_for(0.0), g1 = grads_for(0.1);
  const std::size_t main_tensors = 3 * model::GruLayer<double>::kTensorCount;
  std::size_t differing = 0;
  for (std::size_t i = 0; i < main_tensors; ++i) differing += g0[i] != g1[i];
  EXPECT_GT(differing, 0u);
  // With lambda = 0 the aux stack receives nothing.
  for (std::size_t i = main_tensors; i < 2 * main_tensors; ++i)
    EXPECT_EQ(g0[i], Tensor<double>::zeros_like(g0[i]));
}

num::GradCheckResult full_objective_gradcheck(std::uint64_t seed, SeedMode mode,
                                              std::size_t utterances) {
  auto params = EncoderParams<double>::initialized(tiny(), seed);
  std::vector<Tensor<double>> frames;
  for (std::size_t i = 0; i < utterances; ++i)
    frames.push_back(random_frames(16 - 3 * i, 6, seed * 10 + i));
  auto cfg = window_cfg(2, 4, 3, 1.0, 0.1);
  cfg.seed_mode = mode;
  std::vector<AnchorSet> anchors;
  std::vector<const Tensor<double>*> ptrs;
  for (const auto& f : frames) {
    anchors.push_back(strided_anchors(f.rows(), cfg));
    ptrs.push_back(&f);
  }
  const auto batch = PaddedBatch<double>::from(ptrs);
  std::vector<Tensor<double>> values;
  for (const auto* t : params.tensors()) values.push_back(*t);
  return num::finite_diff_check(
      [&](Tape<double>&, const std::vector<Var<double>>& leaves) {
        auto vars = model::bind<double>(params, leaves);
        return build_objective<double>(vars, batch, anchors, cfg, true).loss;
      },
      values);
}

TEST(BuildObjective, FullLossGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto r = full_objective_gradcheck(seed, SeedMode::kPerLayer, 1);
    EXPECT_LT(r.max_relative_error, 1e-4)
        << "seed " << seed << " param " << r.worst_param << " index "
        << r.worst_index;
  }
}

TEST(BuildObjective, GradientMatchesWithLastLayerSeeding) {
  auto r = full_objective_gradcheck(11, SeedMode::kLastLayerToAll, 1);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(BuildObjective, PaddedBatchGradientMatchesFiniteDifferences) {
  auto r = full_objective_gradcheck(12, SeedMode::kPerLayer, 2);
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(BuildObjective, BatchLossMatchesPerUtteranceOracles) {
  auto params = EncoderParams<double>::initialized(tiny(), 13);
  auto u1 = random_frames(14, 6, 1), u2 = random_frames(10, 6, 2);
  const Tensor<double>* us[] = {&u1, &u2};
  auto cfg = window_cfg(2, 4, 3, 1.0, 0.1);
  std::vector<AnchorSet> anchors{AnchorSet{{6, 10}}, AnchorSet{{5}}};
  Tape<double> tape;
  auto vars = model::bind(tape, params, false);
  auto bd = build_objective<double>(vars, PaddedBatch<double>::from(us),
                                    anchors, cfg, true)
                .breakdown;
  // Frame-weighted across utterances.
  const double lf = (testing::ref_lf(params, u1, 2) * 12 +
                     testing::ref_lf(params, u2, 2) * 8) / 20;
  const double lr = (testing::ref_window_loss(params, u1, 6, cfg) +
                     testing::ref_window_loss(params, u1, 10, cfg) +
                     testing::ref_window_loss(params, u2, 5, cfg)) / 3;
  EXPECT_NEAR(bd.lf, lf, 1e-13);
  EXPECT_NEAR(bd.lr, lr, 1e-13);
  EXPECT_EQ(bd.anchors, 3u);
  EXPECT_EQ(bd.predicted_frames, 20u);
}

}  // namespace
}  // namespace apcr
