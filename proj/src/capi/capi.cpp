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

#include "apcr/apcr.h"

#include <atomic>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <thread>

#include "common/binary_io.hpp"
#include "frontend/corpus.hpp"
#include "frontend/logmel.hpp"
#include "model/checkpoint.hpp"
#include "probe/probe.hpp"
#include "sweep/sweep.hpp"
#include "synthdata/synth.hpp"
#include "trainer/trainer.hpp"

struct apcr_corpus {
  apcr::frontend::Corpus corpus;
};

struct apcr_model {
  apcr::model::Checkpoint checkpoint;
};

namespace {

using apcr::Error;
using apcr::ErrorCode;

thread_local std::string g_last_error;

apcr_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return APCR_ERR_INVALID_ARGUMENT;
    case ErrorCode::kIo: return APCR_ERR_IO;
    case ErrorCode::kBadMagic: return APCR_ERR_BAD_MAGIC;
    case ErrorCode::kDimensionMismatch: return APCR_ERR_DIMENSION_MISMATCH;
    case ErrorCode::kTruncatedPayload: return APCR_ERR_TRUNCATED;
    case ErrorCode::kVersionMismatch: return APCR_ERR_VERSION_MISMATCH;
    case ErrorCode::kNonFinite: return APCR_ERR_NON_FINITE;
    case ErrorCode::kUnsupported: return APCR_ERR_UNSUPPORTED;
    case ErrorCode::kState: return APCR_ERR_STATE;
    case ErrorCode::kCorrupt: return APCR_ERR_CORRUPT;
  }
  return APCR_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
apcr_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return APCR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return APCR_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return APCR_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return APCR_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return APCR_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  apcr::require(p != nullptr, ErrorCode::kInvalidArgument,
                std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

apcr::trainer::TrainConfig to_train_config(const apcr_train_config& c) {
  apcr::require(c.objective == APCR_OBJECTIVE_LF ||
                    c.objective == APCR_OBJECTIVE_LM,
                ErrorCode::kInvalidArgument, "unknown objective");
  apcr::require(c.seed_mode == APCR_SEED_PER_LAYER ||
                    c.seed_mode == APCR_SEED_LAST_LAYER_ALL,
                ErrorCode::kInvalidArgument, "unknown seed mode");
  apcr::trainer::TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.learning_rate = c.learning_rate;
  t.objective = c.objective == APCR_OBJECTIVE_LM ? apcr::Objective::kLm
                                                 : apcr::Objective::kLf;
  t.objective_cfg.horizon = c.horizon;
  t.objective_cfg.past_offset = c.past_offset;
  t.objective_cfg.past_length = c.past_length;
  t.objective_cfg.anchor_probability = c.anchor_probability;
  t.objective_cfg.lambda = c.lambda;
  t.objective_cfg.seed_mode = c.seed_mode == APCR_SEED_LAST_LAYER_ALL
                                  ? apcr::SeedMode::kLastLayerToAll
                                  : apcr::SeedMode::kPerLayer;
  t.encoder.layers = c.layers;
  t.encoder.hidden = c.hidden;
  t.encoder.feature_dim = c.feature_dim;
  t.seed = c.seed;
  t.clip_norm = c.clip_norm;
  t.validation_fraction = c.validation_fraction;
  t.validate();
  return t;
}

apcr::frontend::MelConfig to_mel_config(const apcr_mel_config& c) {
  apcr::frontend::MelConfig m;
  m.sample_rate = c.sample_rate;
  m.window = c.window;
  m.hop = c.hop;
  m.fft_size = c.fft_size;
  m.mel_bins = c.mel_bins;
  m.f_min = c.f_min;
  m.f_max = c.f_max;
  m.log_floor = c.log_floor;
  m.validate();
  return m;
}

apcr::sweep::SweepSpec to_sweep_spec(const apcr_sweep_config& c,
                                     const std::string& out_dir) {
  apcr::require(c.horizon_count == 0 || c.horizons,
                ErrorCode::kInvalidArgument, "sweep: horizons missing");
  apcr::require(c.window_count == 0 || c.windows,
                ErrorCode::kInvalidArgument, "sweep: windows missing");
  apcr::sweep::SweepSpec spec;
  spec.horizons.assign(c.horizons, c.horizons + c.horizon_count);
  spec.windows.clear();
  for (size_t i = 0; i < c.window_count; ++i)
    spec.windows.emplace_back(c.windows[2 * i], c.windows[2 * i + 1]);
  spec.include_baseline = c.include_baseline != 0;
  spec.base = to_train_config(c.base);
  spec.overwrite = c.overwrite != 0;
  spec.threads = c.threads;
  spec.out_dir = out_dir;
  spec.validate();
  return spec;
}

// Config under which a stored model is evaluated.
apcr::trainer::TrainConfig model_config(const apcr::model::Checkpoint& c) {
  apcr::trainer::TrainConfig t;
  t.encoder = c.params.config;
  t.objective_cfg = c.objective;
  if (c.training) {
    t.objective = c.training->objective;
    t.seed = c.training->seed;
    t.batch_size = c.training->batch_size;
  }
  return t;
}

apcr_loss to_loss(const apcr::trainer::EpochStats& s, double lambda) {
  return apcr_loss{s.lf_mean(), s.lr_mean(), s.lm_mean(lambda),
                   s.lf_sum_per_utt(), s.anchors_per_utt()};
}

std::vector<apcr::probe::LabeledSequence> sequences(const apcr_corpus* c) {
  std::vector<apcr::probe::LabeledSequence> out;
  if (!c) return out;
  for (const auto& u : c->corpus.utterances) {
    apcr::require(u.features.has_labels(), ErrorCode::kInvalidArgument,
                  "probe: utterance " + u.id + " has no label track");
    out.push_back({&u.features.frames, &u.features.labels});
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  apcr::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(
                                       text.data()),
                                   text.size()));
}

const int kDefaultShifts[] = {-15, -10, -5, 0, 5, 10, 15};
const size_t kDefaultHorizons[] = {1, 3, 5, 7, 9};
const size_t kDefaultWindows[] = {7, 3, 7, 7, 14, 3, 14, 7, 20, 3, 20, 7};

}  // namespace

extern "C" {

const char* apcr_version(void) { return "1.0.0"; }

const char* apcr_status_string(apcr_status status) {
  switch (status) {
    case APCR_OK: return "ok";
    case APCR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case APCR_ERR_IO: return "i/o error";
    case APCR_ERR_BAD_MAGIC: return "bad magic";
    case APCR_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case APCR_ERR_TRUNCATED: return "truncated payload";
    case APCR_ERR_VERSION_MISMATCH: return "version mismatch";
    case APCR_ERR_NON_FINITE: return "non-finite value";
    case APCR_ERR_UNSUPPORTED: return "unsupported";
    case APCR_ERR_STATE: return "invalid state";
    case APCR_ERR_CORRUPT: return "corrupt data";
    case APCR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* apcr_last_error(void) { return g_last_error.c_str(); }

void apcr_string_free(char* s) { std::free(s); }

void apcr_synth_config_init(apcr_synth_config* cfg) {
  if (!cfg) return;
  apcr::synth::SynthConfig d;
  *cfg = apcr_synth_config{d.classes,     d.dim,        d.mean_duration,
                           d.mean_scale,  d.noise_scale, d.min_length,
                           d.max_length,  d.seed};
}

apcr_status apcr_corpus_generate(const apcr_synth_config* cfg, size_t count,
                                 apcr_corpus** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    apcr::synth::SynthConfig s;
    s.classes = cfg->classes;
    s.dim = cfg->dim;
    s.mean_duration = cfg->mean_duration;
    s.mean_scale = cfg->mean_scale;
    s.noise_scale = cfg->noise_scale;
    s.min_length = cfg->min_length;
    s.max_length = cfg->max_length;
    s.seed = cfg->seed;
    *out = new apcr_corpus{apcr::synth::generate_corpus(s, count)};
  });
}

apcr_status apcr_corpus_load(const char* dir, apcr_corpus** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    auto c = apcr::frontend::load_corpus(dir);
    apcr::require(!c.empty(), ErrorCode::kIo,
                  std::string("no feature files in ") + dir);
    *out = new apcr_corpus{std::move(c)};
  });
}

apcr_status apcr_corpus_save(const apcr_corpus* corpus, const char* dir) {
  return guarded([&] {
    need(corpus, "corpus");
    need(dir, "dir");
    apcr::frontend::save_corpus(dir, corpus->corpus);
  });
}

apcr_status apcr_corpus_split(const apcr_corpus* corpus, double fraction,
                              apcr_corpus** kept, apcr_corpus** held_out) {
  return guarded([&] {
    need(corpus, "corpus");
    need(kept, "kept");
    need(held_out, "held_out");
    auto [a, b] = apcr::frontend::split_by_hash(corpus->corpus, fraction);
    auto ka = std::make_unique<apcr_corpus>(apcr_corpus{std::move(a)});
    auto kb = std::make_unique<apcr_corpus>(apcr_corpus{std::move(b)});
    *kept = ka.release();
    *held_out = kb.release();
  });
}

size_t apcr_corpus_size(const apcr_corpus* c) { return c ? c->corpus.size() : 0; }
size_t apcr_corpus_dim(const apcr_corpus* c) { return c ? c->corpus.dim() : 0; }
size_t apcr_corpus_frames(const apcr_corpus* c) {
  return c ? c->corpus.total_frames() : 0;
}
size_t apcr_corpus_label_classes(const apcr_corpus* c) {
  return c ? c->corpus.label_classes() : 0;
}

apcr_status apcr_corpus_utterance(const apcr_corpus* corpus, size_t index,
                                  const char** id, const float** frames,
                                  size_t* length, const uint16_t** labels) {
  return guarded([&] {
    need(corpus, "corpus");
    apcr::require(index < corpus->corpus.size(), ErrorCode::kInvalidArgument,
                  "utterance index out of range");
    const auto& u = corpus->corpus.utterances[index];
    if (id) *id = u.id.c_str();
    if (frames) *frames = u.features.frames.data();
    if (length) *length = u.features.length();
    if (labels) *labels = u.features.has_labels() ? u.features.labels.data()
                                                  : nullptr;
  });
}

void apcr_corpus_free(apcr_corpus* corpus) { delete corpus; }

void apcr_mel_config_init(apcr_mel_config* cfg) {
  if (!cfg) return;
  apcr::frontend::MelConfig d;
  *cfg = apcr_mel_config{d.sample_rate, d.window, d.hop,   d.fft_size,
                         d.mel_bins,    d.f_min,  d.f_max, d.log_floor};
}

apcr_status apcr_mel_config_check(const apcr_mel_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    to_mel_config(*cfg);
  });
}

apcr_status apcr_featurize_wav(const char* wav_path, const apcr_mel_config* cfg,
                               const char* feature_path) {
  return guarded([&] {
    need(wav_path, "wav_path");
    need(cfg, "config");
    need(feature_path, "feature_path");
    const auto m = to_mel_config(*cfg);
    const auto audio = apcr::frontend::read_wav(wav_path);
    apcr::frontend::write_features(feature_path,
                                   apcr::frontend::log_mel_spectrogram(audio, m));
  });
}

void apcr_train_config_init(apcr_train_config* cfg) {
  if (!cfg) return;
  apcr::trainer::TrainConfig d;
  cfg->epochs = d.epochs;
  cfg->batch_size = d.batch_size;
  cfg->learning_rate = d.learning_rate;
  cfg->objective = APCR_OBJECTIVE_LM;
  cfg->horizon = d.objective_cfg.horizon;
  cfg->past_offset = d.objective_cfg.past_offset;
  cfg->past_length = d.objective_cfg.past_length;
  cfg->anchor_probability = d.objective_cfg.anchor_probability;
  cfg->lambda = d.objective_cfg.lambda;
  cfg->seed_mode = APCR_SEED_PER_LAYER;
  cfg->layers = d.encoder.layers;
  cfg->hidden = d.encoder.hidden;
  cfg->feature_dim = d.encoder.feature_dim;
  cfg->seed = d.seed;
  cfg->clip_norm = d.clip_norm;
  cfg->validation_fraction = d.validation_fraction;
}

apcr_status apcr_train_config_check(const apcr_train_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    to_train_config(*cfg);
  });
}

apcr_status apcr_pretrain(const apcr_corpus* train,
                          const apcr_corpus* validation,
                          const apcr_train_config* cfg, const char* out_dir,
                          int resume, apcr_progress_fn progress, void* user,
                          apcr_model** model_out, apcr_loss* validation_loss) {
  return guarded([&] {
    need(train, "train");
    need(cfg, "config");
    need(out_dir, "out_dir");
    const auto t = to_train_config(*cfg);
    apcr::trainer::PretrainOptions opt;
    opt.out_dir = out_dir;
    opt.resume = resume != 0;
    if (progress) {
      opt.on_row = [&](const apcr::trainer::MetricsRow& r) {
        progress(apcr::trainer::format_row(r).c_str(), user);
      };
    }
    auto result = apcr::trainer::pretrain(
        train->corpus, validation ? &validation->corpus : nullptr, t, opt);
    if (validation_loss)
      *validation_loss = to_loss(result.final_validation, t.objective_cfg.lambda);
    if (model_out) *model_out = new apcr_model{std::move(result.last)};
  });
}

apcr_status apcr_model_load(const char* path, apcr_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new apcr_model{apcr::model::load_checkpoint(path)};
  });
}

apcr_status apcr_model_save(const apcr_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    apcr::model::save_checkpoint(path, model->checkpoint);
  });
}

apcr_status apcr_model_info_get(const apcr_model* model, apcr_model_info* info) {
  return guarded([&] {
    need(model, "model");
    need(info, "info");
    const auto& c = model->checkpoint;
    *info = apcr_model_info{c.params.config.layers,
                            c.params.config.hidden,
                            c.params.config.feature_dim,
                            c.objective.horizon,
                            c.objective.past_offset,
                            c.objective.past_length,
                            c.objective.anchor_probability,
                            c.objective.lambda,
                            c.training.has_value() ? 1 : 0,
                            c.training ? c.training->epochs_done : 0u};
  });
}

apcr_status apcr_model_extract(const apcr_model* model, const float* frames,
                               size_t length, size_t dim, float* out) {
  return guarded([&] {
    need(model, "model");
    need(frames, "frames");
    need(out, "out");
    apcr::require(length > 0 && dim > 0, ErrorCode::kInvalidArgument,
                  "extract: empty input");
    const auto& c = model->checkpoint;
    apcr::num::Tensor<float> x =
        apcr::num::Tensor<float>::matrix(length, dim);
    std::memcpy(x.data(), frames, length * dim * sizeof(float));
    apcr::require(dim == c.normalizer.dim(), ErrorCode::kDimensionMismatch,
                  "extract: frames have D = " + std::to_string(dim) +
                      ", model expects " + std::to_string(c.normalizer.dim()));
    const auto h = apcr::model::extract_features(c.params, c.normalizer.apply(x));
    std::memcpy(out, h.data(), h.size() * sizeof(float));
  });
}

apcr_status apcr_model_extract_corpus(const apcr_model* model,
                                      const apcr_corpus* corpus,
                                      size_t threads, apcr_corpus** out) {
  return guarded([&] {
    need(model, "model");
    need(corpus, "corpus");
    need(out, "out");
    const auto& c = model->checkpoint;
    const auto& in = corpus->corpus.utterances;
    apcr::require(corpus->corpus.dim() == c.normalizer.dim(),
                  ErrorCode::kDimensionMismatch,
                  "extract: corpus has D = " +
                      std::to_string(corpus->corpus.dim()) +
                      ", model expects " + std::to_string(c.normalizer.dim()));
    auto result = std::make_unique<apcr_corpus>();
    auto& utts = result->corpus.utterances;
    utts.resize(in.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    ErrorCode first_code = ErrorCode::kInvalidArgument;
    std::mutex m;
    auto work = [&] {
      for (std::size_t i; !failed && (i = next++) < in.size();) {
        try {
          utts[i].id = in[i].id;
          auto& f = utts[i].features;
          f.frames = apcr::model::extract_features(
              c.params, c.normalizer.apply(in[i].features.frames));
          f.frame_period_us = in[i].features.frame_period_us;
          f.label_classes = in[i].features.label_classes;
          f.labels = in[i].features.labels;
        } catch (const Error& e) {
          std::lock_guard lock(m);
          if (!failed.exchange(true)) {
            first_error = e.what();
            first_code = e.code();
          }
        }
      }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(threads, in.size()));
    if (n == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
    if (failed) apcr::fail(first_code, first_error);
    *out = result.release();
  });
}

apcr_status apcr_model_evaluate(const apcr_model* model,
                                const apcr_corpus* corpus, apcr_loss* loss) {
  return guarded([&] {
    need(model, "model");
    need(corpus, "corpus");
    need(loss, "loss");
    const auto& c = model->checkpoint;
    apcr::require(corpus->corpus.dim() == c.normalizer.dim(),
                  ErrorCode::kDimensionMismatch,
                  "evaluate: corpus dimension differs from the model");
    const auto cfg = model_config(c);
    const auto stats = apcr::trainer::validate(
        c.params, apcr::trainer::prepare(corpus->corpus, c.normalizer), cfg);
    *loss = to_loss(stats, cfg.objective_cfg.lambda);
  });
}

void apcr_model_free(apcr_model* model) { delete model; }

void apcr_probe_config_init(apcr_probe_config* cfg) {
  if (!cfg) return;
  apcr::probe::ProbeConfig d;
  cfg->shifts = kDefaultShifts;
  cfg->shift_count = sizeof kDefaultShifts / sizeof kDefaultShifts[0];
  cfg->classes = 0;
  cfg->collapse = nullptr;
  cfg->epochs = d.epochs;
  cfg->learning_rate = d.learning_rate;
  cfg->eval_every = d.eval_every;
  cfg->standardize = d.standardize ? 1 : 0;
}

apcr_status apcr_collapse_map_read(const char* path, size_t classes,
                                   uint16_t* out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto map = apcr::probe::read_collapse_map(path, classes);
    std::copy(map.begin(), map.end(), out);
  });
}

apcr_status apcr_probe_report(const apcr_probe_source* sources, size_t count,
                              const apcr_probe_config* cfg, double* fer,
                              size_t* frames, char** csv) {
  return guarded([&] {
    need(sources, "sources");
    need(cfg, "config");
    need(fer, "fer");
    apcr::require(count > 0, ErrorCode::kInvalidArgument,
                  "probe: no feature sources");
    apcr::require(cfg->shifts && cfg->shift_count > 0,
                  ErrorCode::kInvalidArgument, "probe: no shifts");
    apcr::probe::ProbeConfig p;
    p.shifts.assign(cfg->shifts, cfg->shifts + cfg->shift_count);
    p.classes = cfg->classes;
    if (p.classes == 0) {
      need(sources[0].train, "train corpus");
      p.classes = sources[0].train->corpus.label_classes();
    }
    if (cfg->collapse)
      p.collapse = std::vector<std::uint16_t>(cfg->collapse,
                                              cfg->collapse + p.classes);
    p.epochs = cfg->epochs;
    p.learning_rate = cfg->learning_rate;
    p.eval_every = cfg->eval_every;
    p.standardize = cfg->standardize != 0;
    std::vector<apcr::probe::ProbeSource> src;
    for (size_t i = 0; i < count; ++i) {
      need(sources[i].train, "train corpus");
      need(sources[i].test, "test corpus");
      src.push_back({sources[i].name ? sources[i].name : "features",
                     sequences(sources[i].train),
                     sequences(sources[i].validation),
                     sequences(sources[i].test)});
    }
    const auto rows = apcr::probe::run_probe_report(src, p);
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < p.shifts.size(); ++j) {
        fer[i * p.shifts.size() + j] = rows[i].per_shift[j].fer();
        if (frames) frames[i * p.shifts.size() + j] = rows[i].per_shift[j].total;
      }
    if (csv) *csv = dup_string(apcr::probe::format_report_csv(rows, p.shifts));
  });
}

void apcr_sweep_config_init(apcr_sweep_config* cfg) {
  if (!cfg) return;
  cfg->horizons = kDefaultHorizons;
  cfg->horizon_count = sizeof kDefaultHorizons / sizeof kDefaultHorizons[0];
  cfg->windows = kDefaultWindows;
  cfg->window_count = sizeof kDefaultWindows / sizeof kDefaultWindows[0] / 2;
  cfg->include_baseline = 1;
  apcr_train_config_init(&cfg->base);
  cfg->overwrite = 0;
  cfg->threads = 1;
}

apcr_status apcr_sweep_config_check(const apcr_sweep_config* cfg) {
  return guarded([&] {
    need(cfg, "config");
    to_sweep_spec(*cfg, "unused");  // the directory is checked by the run
  });
}

apcr_status apcr_sweep_run(const apcr_corpus* train,
                           const apcr_corpus* validation,
                           const apcr_sweep_config* cfg, const char* out_dir,
                           apcr_progress_fn progress, void* user) {
  return guarded([&] {
    need(train, "train");
    need(cfg, "config");
    need(out_dir, "out_dir");
    const auto spec = to_sweep_spec(*cfg, out_dir);
    apcr::sweep::Progress p;
    if (progress) p = [&](const std::string& m) { progress(m.c_str(), user); };
    apcr::sweep::run_sweep(train->corpus,
                           validation ? &validation->corpus : nullptr, spec, p);
  });
}

apcr_status apcr_report_fig2(const char* summary_path, const char* out_dir,
                             size_t* missing) {
  return guarded([&] {
    need(summary_path, "summary_path");
    need(out_dir, "out_dir");
    const auto bytes = apcr::read_file(summary_path);
    const auto rows =
        apcr::sweep::parse_summary_csv(std::string(bytes.begin(), bytes.end()));
    const auto data = apcr::sweep::fig2_data(rows);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);
    write_text((out / "fig2_data.csv").string(),
               apcr::sweep::format_fig2_csv(data));
    write_text((out / "fig2.svg").string(), apcr::sweep::render_fig2_svg(data));
    if (missing) *missing = data.missing.size();
    if (!data.missing.empty()) {
      std::string list;
      for (const auto& m : data.missing) list += (list.empty() ? "" : ", ") + m;
      g_last_error = "missing cells: " + list;
    }
  });
}

}  // extern "C"
