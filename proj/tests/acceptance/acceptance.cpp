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

// Acceptance suite. Runs each criterion and prints one PASS/FAIL line per
// criterion; the exit status is non-zero if any criterion fails.
//
//   apcr_acceptance [--only 1,2,...] [--jobs N] [--work DIR [--fresh]] [--keep]

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"

#include "common/binary_io.hpp"
#include "common/rng.hpp"
#include "frontend/features.hpp"
#include "model/checkpoint.hpp"
#include "numcore/gradcheck.hpp"
#include "objectives/objectives.hpp"
#include "probe/probe.hpp"
#include "synthdata/synth.hpp"
#include "trainer/trainer.hpp"

namespace apcr::acceptance {
namespace {

namespace fs = std::filesystem;
using model::EncoderConfig;
using model::EncoderParams;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Collects named checks; a criterion passes when every check does.
struct Checks {
  std::vector<std::pair<std::string, bool>> items;

  void add(const std::string& what, bool ok) { items.emplace_back(what, ok); }

  Outcome outcome() const {
    Outcome o{true, ""};
    for (const auto& [what, ok] : items) {
      if (!ok) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "failed: " : "; ") + what;
      }
    }
    if (o.pass) {
      for (const auto& [what, ok] : items)
        o.detail += (o.detail.empty() ? "" : "; ") + what;
    }
    return o;
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Tensor<double> random_frames(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> t = Tensor<double>::matrix(n, d);
  for (auto& v : t.storage()) v = 2 * uniform01(rng) - 1;
  return t;
}

EncoderConfig tiny_encoder() {
  EncoderConfig c;
  c.layers = 3;
  c.hidden = 8;
  c.feature_dim = 6;
  return c;
}

ObjectiveConfig window_cfg(std::size_t n, std::size_t s, std::size_t l,
                           double p, double lambda) {
  ObjectiveConfig c;
  c.horizon = n;
  c.past_offset = s;
  c.past_length = l;
  c.anchor_probability = p;
  c.lambda = lambda;
  return c;
}

// ---- 1: gradient correctness --------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Checks checks;
  double worst = 0;
  const auto cfg = window_cfg(2, 4, 3, 1.0, 0.1);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto params = EncoderParams<double>::initialized(tiny_encoder(), seed);
    const auto frames = random_frames(16, 6, 100 + seed);
    const std::vector<AnchorSet> anchors{strided_anchors(16, cfg)};
    const std::vector<const Tensor<double>*> ptrs{&frames};
    const auto batch = PaddedBatch<double>::from(ptrs);
    std::vector<Tensor<double>> values;
    for (const auto* t : params.tensors()) values.push_back(*t);
    const auto r = num::finite_diff_check(
        [&](Tape<double>&, const std::vector<Var<double>>& leaves) {
          auto vars = model::bind<double>(params, leaves);
          return build_objective<double>(vars, batch, anchors, cfg, true).loss;
        },
        values);
    worst = std::max(worst, r.max_relative_error);
    checks.add("seed " + std::to_string(seed) + " (" +
                   std::to_string(anchors[0].size()) + " anchors) rel err " +
                   fmt("%.2e", r.max_relative_error),
               r.max_relative_error < 1e-4 && !anchors[0].empty());
  }
  const double t = seconds_since(t0);
  checks.add("runtime " + fmt("%.1f", t) + "s < 60s", t < 60);
  return checks.outcome();
}

// ---- 2: objective identities ---------------------------------------------

Outcome objective_identities() {
  Checks checks;
  auto params = EncoderParams<double>::initialized(tiny_encoder(), 7);
  const auto frames = random_frames(16, 6, 7);
  Rng rng(1);

  const auto zero_lambda =
      compute_lm(params, frames, window_cfg(1, 4, 3, 1.0, 0.0), rng);
  checks.add("lambda=0: L_m == L_f bit-exact",
             std::memcmp(&zero_lambda.lm, &zero_lambda.lf, sizeof(double)) ==
                     0 &&
                 zero_lambda.lr > 0);

  const auto no_anchors =
      compute_lm(params, frames, window_cfg(1, 4, 3, 0.0, 0.1), rng);
  checks.add("M=0: L_r == 0",
             no_anchors.anchors == 0 && no_anchors.lr == 0.0 &&
                 no_anchors.lm == no_anchors.lf);

  bool exact = true;
  for (double lambda : {0.01, 0.1, 0.5, 1.0, 3.0}) {
    const auto bd =
        compute_lm(params, frames, window_cfg(2, 5, 3, 0.5, lambda), rng);
    exact = exact && bd.lm == bd.lf + lambda * bd.lr;
  }
  checks.add("L_m == L_f + lambda*L_r exactly", exact);

  // Perfect prediction: a sequence generated by the model itself.
  EncoderConfig ec;
  ec.layers = 2;
  ec.hidden = 4;
  ec.feature_dim = 4;
  auto p = EncoderParams<double>::initialized(ec, 5);
  const std::size_t T = 12;
  Tensor<double> x = Tensor<double>::matrix(T, 4);
  x.at(0, 0) = 1.0;
  x.at(0, 2) = -0.5;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    Tensor<double> prefix = Tensor<double>::matrix(t + 1, 4);
    std::copy_n(x.data(), (t + 1) * 4, prefix.data());
    auto y = model::project(p.proj, model::extract_features(p, prefix));
    std::copy_n(y.data() + t * 4, 4, x.data() + (t + 1) * 4);
  }
  const auto self =
      compute_lm(p, x, window_cfg(1, 4, 3, 0.0, 0.1), rng);
  checks.add("perfect prediction: L_f = " + fmt("%.1e", self.lf),
             self.lf < 1e-12);
  checks.add("identical frames: L_f = 0",
             compute_lf(frames, frames).sum == 0.0);
  return checks.outcome();
}

// ---- 3: anchor sampler ---------------------------------------------------

bool eligible_by_definition(long a, long N, const ObjectiveConfig& c) {
  const long s = static_cast<long>(c.past_offset);
  const long l = static_cast<long>(c.past_length);
  const long n = static_cast<long>(c.horizon);
  return a - s >= 1 && a - s + l - 1 + n <= N;
}

Outcome anchor_sampler() {
  Checks checks;
  const auto cfg = window_cfg(1, 7, 3, 0.15, 0.1);
  const std::size_t N = 200, draws = 10000;
  std::size_t eligible = 0;
  for (long a = 1; a <= static_cast<long>(N); ++a)
    eligible += eligible_by_definition(a, N, cfg);
  Rng rng(31337);
  std::size_t selected = 0, violations = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto set = sample_anchors(N, cfg, rng);
    for (std::size_t j = 0; j < set.size(); ++j) {
      violations += !eligible_by_definition(
          static_cast<long>(set.positions[j]), N, cfg);
      if (j) violations += set.positions[j] <= set.positions[j - 1];
    }
    selected += set.size();
  }
  const double trials = static_cast<double>(eligible * draws);
  const double rate = static_cast<double>(selected) / trials;
  const double half = 2.5758 * std::sqrt(0.15 * 0.85 / trials);
  checks.add(std::to_string(violations) + " violations", violations == 0);
  checks.add("rate " + fmt("%.5f", rate) + " in 0.15 +- " + fmt("%.5f", half),
             std::abs(rate - 0.15) <= half);

  bool support = true;
  auto full = cfg;
  full.anchor_probability = 1.0;
  for (std::size_t n : {1u, 3u, 5u, 9u})
    for (std::size_t s : {7u, 14u, 20u})
      for (std::size_t l : {3u, 7u})
        for (long len = 1; len <= 60; ++len) {
          full.horizon = n;
          full.past_offset = s;
          full.past_length = l;
          std::vector<std::size_t> expected;
          for (long a = 1; a <= len; ++a)
            if (eligible_by_definition(a, len, full)) expected.push_back(a);
          support = support && sample_anchors(len, full, rng).positions == expected;
        }
  checks.add("P=1 support equals enumerated predicate", support);
  return checks.outcome();
}

// ---- 4 and 5: synthetic trend runs ---------------------------------------

struct TrendData {
  frontend::Corpus train, validation, test;
};

TrendData trend_data() {
  synth::SynthConfig sc;  // mean segment 7 frames
  sc.seed = 777;
  auto all = synth::generate_corpus(sc, 240);
  TrendData d;
  for (std::size_t i = 0; i < all.size(); ++i)
    (i < 200 ? d.train : d.validation).utterances.push_back(all.utterances[i]);
  sc.seed = 778;
  d.test = synth::generate_corpus(sc, 100);
  return d;
}

struct RunKey {
  std::size_t n;
  bool lm;
  std::uint64_t seed;
  auto operator<=>(const RunKey&) const = default;
  std::string name() const {
    return "n" + std::to_string(n) + (lm ? "_lm" : "_lf") + "_seed" +
           std::to_string(seed);
  }
};

struct RunResult {
  double val_lf = 0;
  fs::path dir;
};

class TrendRuns {
 public:
  TrendRuns(fs::path work, std::size_t jobs)
      : work_(std::move(work)), jobs_(jobs), data_(trend_data()) {}

  const TrendData& data() const { return data_; }

  // Trains every requested run not yet present.
  void ensure(const std::vector<RunKey>& keys) {
    std::vector<RunKey> todo;
    for (const auto& k : keys)
      if (!results_.count(k)) todo.push_back(k);
    std::atomic<std::size_t> next{0};
    std::mutex m;
    std::exception_ptr error;
    auto worker = [&] {
      for (std::size_t i; (i = next++) < todo.size();) {
        try {
          const auto r = train(todo[i]);
          std::lock_guard lock(m);
          results_[todo[i]] = r;
          std::fprintf(stderr, "  trained %-16s val L_f %.6f\n",
                       todo[i].name().c_str(), r.val_lf);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
          next = todo.size();
        }
      }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(jobs_, todo.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  const RunResult& at(const RunKey& k) const { return results_.at(k); }

 private:
  RunResult train(const RunKey& k) const {
    trainer::TrainConfig cfg;
    cfg.epochs = 60;
    cfg.seed = k.seed;
    cfg.encoder.hidden = 32;
    cfg.encoder.feature_dim = 20;
    cfg.objective = k.lm ? Objective::kLm : Objective::kLf;
    cfg.objective_cfg.horizon = k.n;
    trainer::PretrainOptions opt;
    opt.out_dir = (work_ / k.name()).string();
    opt.resume = fs::exists(work_ / k.name() / "last.ckpt");
    const auto r = trainer::pretrain(data_.train, &data_.validation, cfg, opt);
    return {r.final_validation.lf_mean(), work_ / k.name()};
  }

  fs::path work_;
  std::size_t jobs_;
  TrendData data_;
  std::map<RunKey, RunResult> results_;
};

constexpr std::uint64_t kSeeds = 5;

std::vector<RunKey> trend_keys(std::initializer_list<std::size_t> horizons) {
  std::vector<RunKey> keys;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed)
    for (auto n : horizons)
      for (bool lm : {false, true}) keys.push_back({n, lm, seed});
  return keys;
}

Outcome figure2_trend(TrendRuns& runs) {
  const auto t0 = std::chrono::steady_clock::now();
  runs.ensure(trend_keys({5, 1}));
  Checks checks;
  std::map<std::size_t, double> mean_rel;
  std::size_t wins5 = 0;
  std::string per_seed;
  for (std::size_t n : {1u, 5u}) {
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
      const double lf = runs.at({n, false, seed}).val_lf;
      const double lm = runs.at({n, true, seed}).val_lf;
      const double rel = (lf - lm) / lf;
      mean_rel[n] += rel / kSeeds;
      if (n == 5) {
        wins5 += lm < lf;
        per_seed += (per_seed.empty() ? "" : " ") + fmt("%+.3f%%", 100 * rel);
      }
    }
  }
  checks.add("n=5 L_m beats L_f in " + std::to_string(wins5) + "/5 seeds [" +
                 per_seed + "]",
             wins5 >= 4);
  checks.add("mean rel. gain n=5 " + fmt("%+.3f%%", 100 * mean_rel[5]) +
                 " > n=1 " + fmt("%+.3f%%", 100 * mean_rel[1]),
             mean_rel[5] > mean_rel[1]);
  const double t = seconds_since(t0);
  checks.add("runtime " + fmt("%.0f", t) + "s < 1800s", t < 1800);
  return checks.outcome();
}

struct Owned {
  std::vector<Tensor<float>> features;
  std::vector<std::vector<std::uint16_t>> labels;

  std::vector<probe::LabeledSequence> view() const {
    std::vector<probe::LabeledSequence> v;
    for (std::size_t i = 0; i < features.size(); ++i)
      v.push_back({&features[i], &labels[i]});
    return v;
  }
};

Owned features_of(const frontend::Corpus& c, const model::Checkpoint* ck) {
  Owned o;
  for (const auto& u : c.utterances) {
    o.labels.push_back(u.features.labels);
    o.features.push_back(
        ck ? model::extract_features(ck->params,
                                     ck->normalizer.apply(u.features.frames))
           : u.features.frames);
  }
  return o;
}

Outcome probe_trends(TrendRuns& runs) {
  const auto keys = trend_keys({5});
  runs.ensure(keys);
  const auto t0 = std::chrono::steady_clock::now();
  const auto& d = runs.data();
  probe::ProbeConfig cfg;
  cfg.shifts = {-5, 0, 5};
  cfg.classes = d.train.label_classes();

  // FER per shift for one feature source.
  auto fers = [&](const model::Checkpoint* ck, const std::string& name) {
    const auto a = features_of(d.train, ck), b = features_of(d.validation, ck),
               c = features_of(d.test, ck);
    const auto rows =
        probe::run_probe_report({{name, a.view(), b.view(), c.view()}}, cfg);
    std::map<int, double> out;
    for (std::size_t i = 0; i < cfg.shifts.size(); ++i)
      out[cfg.shifts[i]] = rows[0].per_shift[i].fer();
    std::fprintf(stderr, "  probe %-16s FER -5 %.3f  0 %.3f  +5 %.3f\n",
                 name.c_str(), out[-5], out[0], out[5]);
    return out;
  };

  const auto raw = fers(nullptr, "raw");
  std::map<RunKey, std::map<int, double>> apc;
  for (const auto& k : keys) {
    const auto path = (runs.at(k).dir / "last.ckpt").string();
    const auto before = read_file(path);
    const auto ck = model::load_checkpoint(path);
    apc[k] = fers(&ck, k.name());
    if (read_file(path) != before)
      return {false, "checkpoint " + path + " changed during probing"};
  }

  Checks checks;
  double mean_lf = 0, mean_lm = 0;
  std::size_t lm_wins = 0, asym = 0;
  for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
    const auto& lf = apc[{5, false, seed}];
    const auto& lm = apc[{5, true, seed}];
    mean_lf += lf.at(0) / kSeeds;
    mean_lm += lm.at(0) / kSeeds;
    lm_wins += lm.at(0) <= lf.at(0);
    asym += lf.at(-5) < lf.at(5);
    asym += lm.at(-5) < lm.at(5);
  }
  checks.add("(a) shift-0 FER raw " + fmt("%.3f", raw.at(0)) + " > L_f " +
                 fmt("%.3f", mean_lf) + ", L_m " + fmt("%.3f", mean_lm) +
                 " (5-seed means)",
             mean_lf < raw.at(0) && mean_lm < raw.at(0));
  checks.add("(b) n=5 L_m FER <= L_f in " + std::to_string(lm_wins) +
                 "/5 seeds",
             lm_wins >= 4);
  checks.add("(c) FER(-5) < FER(+5) for " + std::to_string(asym) +
                 "/10 APC models",
             asym == 2 * kSeeds);
  const double t = seconds_since(t0);
  checks.add("runtime " + fmt("%.0f", t) + "s < 1200s", t < 1200);
  return checks.outcome();
}

// ---- 6: determinism and persistence --------------------------------------

trainer::PretrainOptions options(const fs::path& dir, bool resume = false) {
  trainer::PretrainOptions o;
  o.out_dir = dir.string();
  o.resume = resume;
  return o;
}

std::string slurp(const fs::path& p) {
  const auto b = read_file(p.string());
  return std::string(b.begin(), b.end());
}

// Metrics rows without the trailing wall_seconds column.
std::string strip_wall_seconds(const std::string& csv) {
  std::stringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Outcome determinism(const fs::path& work) {
  Checks checks;
  synth::SynthConfig sc;
  sc.seed = 4242;
  sc.min_length = 30;
  sc.max_length = 60;
  const auto corpus = synth::generate_corpus(sc, 40);
  trainer::TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 8;
  cfg.encoder.hidden = 16;
  cfg.encoder.feature_dim = sc.dim;
  cfg.objective_cfg.horizon = 3;
  cfg.objective_cfg.anchor_probability = 0.3;
  const auto dir = work / "determinism";

  trainer::pretrain(corpus, nullptr, cfg, options(dir / "a"));
  trainer::pretrain(corpus, nullptr, cfg, options(dir / "b"));
  const auto ma = slurp(dir / "a" / "metrics.csv");
  checks.add("repeat run metrics.csv identical",
             strip_wall_seconds(ma) ==
                 strip_wall_seconds(slurp(dir / "b" / "metrics.csv")) &&
                 std::count(ma.begin(), ma.end(), '\n') == 9);
  checks.add("repeat run checkpoints identical",
             read_file((dir / "a" / "last.ckpt").string()) ==
                 read_file((dir / "b" / "last.ckpt").string()));

  auto half = cfg;
  half.epochs = 2;
  trainer::pretrain(corpus, nullptr, half, options(dir / "r"));
  trainer::pretrain(corpus, nullptr, cfg, options(dir / "r", true));
  checks.add("resumed run matches uninterrupted (ckpt + metrics)",
             read_file((dir / "a" / "last.ckpt").string()) ==
                     read_file((dir / "r" / "last.ckpt").string()) &&
                 read_file((dir / "a" / "best.ckpt").string()) ==
                     read_file((dir / "r" / "best.ckpt").string()) &&
                 strip_wall_seconds(ma) ==
                     strip_wall_seconds(slurp(dir / "r" / "metrics.csv")));

  // Feature-file roundtrip, with and without labels, including odd values.
  bool features_ok = true;
  for (bool labels : {false, true}) {
    auto m = corpus.utterances[3].features;
    if (!labels) {
      m.labels.clear();
      m.label_classes = 0;
    }
    m.frames.storage()[0] = -0.0f;
    m.frames.storage()[1] = 1e-42f;  // subnormal
    const auto path = (dir / ("f" + std::to_string(labels) + ".pcrp")).string();
    frontend::write_features(path, m);
    const auto back = frontend::read_features(path);
    features_ok = features_ok && back.labels == m.labels &&
                  back.frames.shape() == m.frames.shape() &&
                  std::memcmp(back.frames.data(), m.frames.data(),
                              m.frames.size() * sizeof(float)) == 0 &&
                  frontend::encode_features(back) == read_file(path);
  }
  checks.add("feature file roundtrip bit-exact", features_ok);

  const auto path = (dir / "a" / "last.ckpt").string();
  const auto bytes = read_file(path);
  const auto ck = model::load_checkpoint(path);
  const auto copy = (dir / "copy.ckpt").string();
  model::save_checkpoint(copy, ck);
  const auto again = model::load_checkpoint(copy);
  bool params_equal = true;
  const auto pa = ck.params.tensors(), pb = again.params.tensors();
  for (std::size_t i = 0; i < pa.size(); ++i)
    params_equal = params_equal && pa[i]->shape() == pb[i]->shape() &&
                   std::memcmp(pa[i]->data(), pb[i]->data(),
                               pa[i]->size() * sizeof(float)) == 0;
  checks.add("checkpoint roundtrip bit-exact",
             read_file(copy) == bytes && params_equal &&
                 again.objective == ck.objective &&
                 again.normalizer == ck.normalizer);
  return checks.outcome();
}

// ---- 7: probe sanity -----------------------------------------------------

Outcome probe_sanity() {
  Checks checks;
  Rng rng(99);

  // Shuffled labels: chance level 1 - 1/C.
  auto noise = [&](std::size_t n) {
    Owned o;
    o.features.push_back(Tensor<float>::matrix(n, 10));
    o.labels.emplace_back(n);
    for (auto& v : o.features[0].storage())
      v = static_cast<float>(standard_normal(rng));
    for (std::size_t i = 0; i < n; ++i)
      o.labels[0][i] = static_cast<std::uint16_t>(i % 8);
    portable_shuffle(o.labels[0].begin(), o.labels[0].end(), rng);
    return o;
  };
  const auto tr = noise(4000), va = noise(1000), te = noise(4000);
  probe::ProbeConfig cfg;
  cfg.classes = 8;
  const auto clf = probe::train_probe(tr.view(), va.view(), 0, cfg);
  const double chance = probe::evaluate_fer(clf, te.view(), 0, {}).fer();
  checks.add("shuffled FER " + fmt("%.3f", chance) + " ~ 0.875 +- 0.05",
             std::abs(chance - 0.875) <= 0.05);

  // Separable blobs, confirmed by a perceptron reaching zero errors.
  Owned blobs;
  blobs.features.push_back(Tensor<float>::matrix(400, 6));
  blobs.labels.emplace_back(400);
  for (std::size_t i = 0; i < 400; ++i) {
    const auto c = static_cast<std::uint16_t>(uniform_index(rng, 2));
    blobs.labels[0][i] = c;
    for (std::size_t j = 0; j < 6; ++j)
      blobs.features[0].at(i, j) = static_cast<float>(
          (j == 4 ? (c ? 3.0 : -3.0) : 0.0) + 0.5 * standard_normal(rng));
  }
  bool separable = false;
  std::vector<double> w(7, 0.0);
  for (int pass = 0; pass < 1000 && !separable; ++pass) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < 400; ++i) {
      double s = w[6];
      for (std::size_t j = 0; j < 6; ++j) s += w[j] * blobs.features[0].at(i, j);
      const double y = blobs.labels[0][i] ? 1.0 : -1.0;
      if (y * s <= 0) {
        ++mistakes;
        for (std::size_t j = 0; j < 6; ++j) w[j] += y * blobs.features[0].at(i, j);
        w[6] += y;
      }
    }
    separable = mistakes == 0;
  }
  probe::ProbeConfig two;
  two.classes = 2;
  const auto sep = probe::train_probe(blobs.view(), {}, 0, two);
  const double acc = 1.0 - probe::evaluate_fer(sep, blobs.view(), 0, {}).fer();
  checks.add("separable fixture train acc " + fmt("%.4f", acc) + " >= 0.99",
             separable && acc >= 0.99);

  // Collapse fixture: classes 1 and 2 confused, then merged.
  auto c3 = probe::LinearClassifier::zeros(3, 3);
  for (std::size_t c = 0; c < 3; ++c) c3.weights.at(c, c) = 1.0;
  Owned f;
  f.features.push_back(Tensor<float>({3, 3}, {1, 0, 0, 0, 0, 1, 0, 1, 0}));
  f.labels.push_back({0, 1, 2});
  const std::vector<std::uint16_t> identity{0, 1, 2}, merge{0, 1, 1};
  const std::size_t preds[] = {0, 2, 1};
  std::size_t oracle_id = 0, oracle_merge = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    oracle_id += identity[preds[t]] != identity[f.labels[0][t]];
    oracle_merge += merge[preds[t]] != merge[f.labels[0][t]];
  }
  const auto e_id = probe::evaluate_fer(c3, f.view(), 0, identity).errors;
  const auto e_merge = probe::evaluate_fer(c3, f.view(), 0, merge).errors;
  checks.add("collapse fixture errors " + std::to_string(e_id) + "->" +
                 std::to_string(e_merge) + " (oracle " +
                 std::to_string(oracle_id) + "->" +
                 std::to_string(oracle_merge) + ")",
             e_id == oracle_id && e_merge == oracle_merge && oracle_id == 2 &&
                 oracle_merge == 0);
  return checks.outcome();
}

}  // namespace
}  // namespace apcr::acceptance

int main(int argc, char** argv) {
  using namespace apcr::acceptance;
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string work;
  bool keep = false, fresh = false;
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  app.add_option("--jobs", jobs, "parallel training runs")->capture_default_str();
  app.add_option("--work", work, "scratch directory (reused if present)");
  app.add_flag("--keep", keep, "keep the scratch directory");
  app.add_flag("--fresh", fresh, "empty --work before starting");
  CLI11_PARSE(app, argc, argv);

  const bool own_work = work.empty();
  const fs::path dir =
      own_work ? fs::temp_directory_path() /
                     ("apcr_acceptance_" + std::to_string(::getpid()))
               : fs::path(work);
  if (fresh) fs::remove_all(dir);
  fs::create_directories(dir);
  TrendRuns runs(dir / "trend", jobs);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"objective identities", objective_identities},
      {"anchor sampler", anchor_sampler},
      {"figure-2 trend", [&] { return figure2_trend(runs); }},
      {"probe trends", [&] { return probe_trends(runs); }},
      {"determinism and persistence", [&] { return determinism(dir); }},
      {"probe sanity", probe_sanity},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %d %s  %s (%.1fs): %s\n", id,
                o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  if (own_work && !keep) {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  return failures == 0 ? 0 : 1;
}
