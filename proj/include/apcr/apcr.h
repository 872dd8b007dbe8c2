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

/* C interface to the apcr library: synthetic corpora, log-mel features,
 * APC pretraining with the past-reconstruction regularizer, feature
 * extraction, linear probing and the horizon/window sweep.
 *
 * Every fallible call returns an apcr_status; on failure a description is
 * available from apcr_last_error() on the calling thread. Handles are
 * opaque and released with the matching *_free function. */

#ifndef APCR_APCR_H_
#define APCR_APCR_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define APCR_API __declspec(dllexport)
#else
#define APCR_API __attribute__((visibility("default")))
#endif

typedef enum apcr_status {
  APCR_OK = 0,
  APCR_ERR_INVALID_ARGUMENT = 1,
  APCR_ERR_IO = 2,
  APCR_ERR_BAD_MAGIC = 3,
  APCR_ERR_DIMENSION_MISMATCH = 4,
  APCR_ERR_TRUNCATED = 5,
  APCR_ERR_VERSION_MISMATCH = 6,
  APCR_ERR_NON_FINITE = 7,
  APCR_ERR_UNSUPPORTED = 8,
  APCR_ERR_STATE = 9,
  APCR_ERR_CORRUPT = 10,
  APCR_ERR_INTERNAL = 11
} apcr_status;

typedef enum apcr_objective {
  APCR_OBJECTIVE_LF = 0, /* future prediction only */
  APCR_OBJECTIVE_LM = 1  /* future prediction + lambda * past reconstruction */
} apcr_objective;

typedef enum apcr_seed_mode {
  APCR_SEED_PER_LAYER = 0,      /* aux layer k starts from main layer k */
  APCR_SEED_LAST_LAYER_ALL = 1  /* every aux layer starts from the top layer */
} apcr_seed_mode;

APCR_API const char* apcr_version(void);
APCR_API const char* apcr_status_string(apcr_status status);
/* Message for the most recent failure on this thread ("" if none). */
APCR_API const char* apcr_last_error(void);

/* Strings returned by the library are released with this. */
APCR_API void apcr_string_free(char* s);

typedef void (*apcr_progress_fn)(const char* message, void* user);

/* ---- corpora ---------------------------------------------------------- */

typedef struct apcr_corpus apcr_corpus;

typedef struct apcr_synth_config {
  size_t classes;       /* default 8 */
  size_t dim;           /* default 20, must be >= classes */
  double mean_duration; /* geometric segment length, default 7 */
  double mean_scale;    /* class c has mean mean_scale * e_c, default 1 */
  double noise_scale;   /* Gaussian std per dimension */
  size_t min_length;    /* utterance length range, frames */
  size_t max_length;
  uint64_t seed;
} apcr_synth_config;

APCR_API void apcr_synth_config_init(apcr_synth_config* cfg);
APCR_API apcr_status apcr_corpus_generate(const apcr_synth_config* cfg,
                                          size_t count, apcr_corpus** out);
/* A corpus directory holds one <id>.pcrp feature file per utterance. */
APCR_API apcr_status apcr_corpus_load(const char* dir, apcr_corpus** out);
APCR_API apcr_status apcr_corpus_save(const apcr_corpus* corpus,
                                      const char* dir);
/* Deterministic split by hash of utterance id; `held_out` receives about
 * `fraction` of the utterances. */
APCR_API apcr_status apcr_corpus_split(const apcr_corpus* corpus,
                                       double fraction, apcr_corpus** kept,
                                       apcr_corpus** held_out);
APCR_API size_t apcr_corpus_size(const apcr_corpus* corpus);
APCR_API size_t apcr_corpus_dim(const apcr_corpus* corpus);
APCR_API size_t apcr_corpus_frames(const apcr_corpus* corpus);
APCR_API size_t apcr_corpus_label_classes(const apcr_corpus* corpus);
/* Borrowed views into utterance `index`; valid while the corpus lives.
 * `labels` is NULL when the corpus has no label track. */
APCR_API apcr_status apcr_corpus_utterance(const apcr_corpus* corpus,
                                           size_t index, const char** id,
                                           const float** frames,
                                           size_t* length,
                                           const uint16_t** labels);
APCR_API void apcr_corpus_free(apcr_corpus* corpus);

/* ---- log-mel frontend ------------------------------------------------- */

typedef struct apcr_mel_config {
  uint32_t sample_rate; /* 16000 */
  size_t window;        /* 400 samples */
  size_t hop;           /* 160 samples */
  size_t fft_size;      /* 512 */
  size_t mel_bins;      /* 80 */
  double f_min;         /* 0 Hz */
  double f_max;         /* 8000 Hz */
  double log_floor;     /* 1e-10 */
} apcr_mel_config;

APCR_API void apcr_mel_config_init(apcr_mel_config* cfg);
APCR_API apcr_status apcr_mel_config_check(const apcr_mel_config* cfg);
/* Converts one WAV file (16-bit PCM or 32-bit float, mono) into a feature
 * file. */
APCR_API apcr_status apcr_featurize_wav(const char* wav_path,
                                        const apcr_mel_config* cfg,
                                        const char* feature_path);

/* ---- pretraining ------------------------------------------------------ */

typedef struct apcr_train_config {
  size_t epochs;        /* 100 */
  size_t batch_size;    /* 32 */
  double learning_rate; /* 1e-3 */
  apcr_objective objective;
  size_t horizon;       /* n, 1 */
  size_t past_offset;   /* s, 7 */
  size_t past_length;   /* l, 3 */
  double anchor_probability; /* P, 0.15 */
  double lambda;        /* 0.1 */
  apcr_seed_mode seed_mode;
  size_t layers;        /* 3 */
  size_t hidden;        /* 512 */
  size_t feature_dim;   /* 80 */
  uint64_t seed;
  double clip_norm;     /* 0 = off */
  double validation_fraction; /* 0.05, used when no validation corpus */
} apcr_train_config;

APCR_API void apcr_train_config_init(apcr_train_config* cfg);
/* Validates a configuration without touching any files. */
APCR_API apcr_status apcr_train_config_check(const apcr_train_config* cfg);

typedef struct apcr_loss {
  double lf;  /* frame-weighted mean future loss */
  double lr;  /* mean past-reconstruction loss over anchors */
  double lm;  /* lf + lambda * lr */
  double lf_sum_per_utterance;
  double anchors_per_utterance;
} apcr_loss;

typedef struct apcr_model apcr_model;

/* Trains into out_dir (metrics.csv, last.ckpt, best.ckpt). `validation`
 * may be NULL to hold out a hashed share of `train`. With `resume` set an
 * existing last.ckpt is continued. `model_out` (optional) receives the
 * final model; `validation_loss` (optional) its validation losses. */
APCR_API apcr_status apcr_pretrain(const apcr_corpus* train,
                                   const apcr_corpus* validation,
                                   const apcr_train_config* cfg,
                                   const char* out_dir, int resume,
                                   apcr_progress_fn progress, void* user,
                                   apcr_model** model_out,
                                   apcr_loss* validation_loss);

/* ---- models ----------------------------------------------------------- */

typedef struct apcr_model_info {
  size_t layers;
  size_t hidden;
  size_t feature_dim;
  size_t horizon;
  size_t past_offset;
  size_t past_length;
  double anchor_probability;
  double lambda;
  int has_optimizer_state;
  uint32_t epochs_done;
} apcr_model_info;

APCR_API apcr_status apcr_model_load(const char* path, apcr_model** out);
APCR_API apcr_status apcr_model_save(const apcr_model* model,
                                     const char* path);
APCR_API apcr_status apcr_model_info_get(const apcr_model* model,
                                         apcr_model_info* info);
/* Representations of `length` raw frames (normalized internally):
 * writes length * hidden floats to `out`. */
APCR_API apcr_status apcr_model_extract(const apcr_model* model,
                                        const float* frames, size_t length,
                                        size_t dim, float* out);
/* Same for every utterance of a corpus; labels are carried over. */
APCR_API apcr_status apcr_model_extract_corpus(const apcr_model* model,
                                               const apcr_corpus* corpus,
                                               size_t threads,
                                               apcr_corpus** out);
/* Validation losses of the model on a corpus (deterministic anchors). */
APCR_API apcr_status apcr_model_evaluate(const apcr_model* model,
                                         const apcr_corpus* corpus,
                                         apcr_loss* loss);
APCR_API void apcr_model_free(apcr_model* model);

/* ---- probing ---------------------------------------------------------- */

typedef struct apcr_probe_config {
  const int* shifts;      /* default {-15,-10,-5,0,5,10,15} */
  size_t shift_count;
  size_t classes;         /* 0 = take from the corpora */
  const uint16_t* collapse; /* optional map of `classes` entries */
  size_t epochs;          /* 200 */
  double learning_rate;   /* 1e-2 */
  size_t eval_every;      /* 10 */
  int standardize;        /* 1 */
} apcr_probe_config;

typedef struct apcr_probe_source {
  const char* name;
  const apcr_corpus* train;
  const apcr_corpus* validation; /* may be NULL: no model selection */
  const apcr_corpus* test;
} apcr_probe_source;

APCR_API void apcr_probe_config_init(apcr_probe_config* cfg);
/* Reads "src dst" pairs; `out` must hold `classes` entries. */
APCR_API apcr_status apcr_collapse_map_read(const char* path, size_t classes,
                                            uint16_t* out);
/* Trains one linear probe per (source, shift) and scores the test split.
 * `fer` receives count * shift_count error rates (row-major by source);
 * `frames` (optional) the scored frame counts; `csv` (optional) the
 * report text, released with apcr_string_free. */
APCR_API apcr_status apcr_probe_report(const apcr_probe_source* sources,
                                       size_t count,
                                       const apcr_probe_config* cfg,
                                       double* fer, size_t* frames,
                                       char** csv);

/* ---- sweep and report ------------------------------------------------- */

typedef struct apcr_sweep_config {
  const size_t* horizons; /* default {1,3,5,7,9} */
  size_t horizon_count;
  const size_t* windows;  /* (s, l) pairs flattened; default 7/14/20 x 3/7 */
  size_t window_count;    /* number of pairs */
  int include_baseline;   /* 1 */
  apcr_train_config base;
  int overwrite;
  size_t threads;
} apcr_sweep_config;

APCR_API void apcr_sweep_config_init(apcr_sweep_config* cfg);
APCR_API apcr_status apcr_sweep_config_check(const apcr_sweep_config* cfg);
/* Trains every missing cell under out_dir and writes summary.csv. */
APCR_API apcr_status apcr_sweep_run(const apcr_corpus* train,
                                    const apcr_corpus* validation,
                                    const apcr_sweep_config* cfg,
                                    const char* out_dir,
                                    apcr_progress_fn progress, void* user);
/* Reads a summary.csv and writes fig2_data.csv and fig2.svg into out_dir.
 * `missing` (optional) receives the number of absent cells. */
APCR_API apcr_status apcr_report_fig2(const char* summary_path,
                                      const char* out_dir, size_t* missing);

#ifdef __cplusplus
}
#endif

#endif /* APCR_APCR_H_ */
