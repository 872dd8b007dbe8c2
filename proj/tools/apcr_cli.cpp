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

// apcr: command-line front end over the C library.
//
//   apcr synth      --out DIR [--count N --seed S ...]
//   apcr featurize  --in WAV_DIR --out DIR
//   apcr pretrain   --train DIR [--val DIR] --out DIR [model/objective flags]
//   apcr extract    --model CKPT --in DIR --out DIR
//   apcr probe      --train DIR --test DIR [--model NAME=CKPT ...] --out DIR
//   apcr sweep      --train DIR [--val DIR] --out DIR [--n 1,5 --s 7 --l 3]
//   apcr report     --summary FILE --out DIR
//
// Settings resolve as defaults < --config FILE < flags, and the effective
// settings are written to config.json in the output directory.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "apcr/apcr.h"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// Failure carrying the library status (or a usage problem when status is OK).
struct CliError : std::runtime_error {
  apcr_status status;
  CliError(apcr_status s, const std::string& what)
      : std::runtime_error(what), status(s) {}
};

void check(apcr_status s) {
  if (s != APCR_OK) throw CliError(s, apcr_last_error());
}

[[noreturn]] void usage_error(const std::string& what) {
  throw CliError(APCR_ERR_INVALID_ARGUMENT, what);
}

struct CorpusDeleter {
  void operator()(apcr_corpus* c) const { apcr_corpus_free(c); }
};
struct ModelDeleter {
  void operator()(apcr_model* m) const { apcr_model_free(m); }
};
using CorpusPtr = std::unique_ptr<apcr_corpus, CorpusDeleter>;
using ModelPtr = std::unique_ptr<apcr_model, ModelDeleter>;

CorpusPtr load_corpus(const std::string& dir) {
  apcr_corpus* c = nullptr;
  check(apcr_corpus_load(dir.c_str(), &c));
  return CorpusPtr(c);
}

ModelPtr load_model(const std::string& path) {
  apcr_model* m = nullptr;
  check(apcr_model_load(path.c_str(), &m));
  return ModelPtr(m);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(APCR_ERR_IO, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_line(const char* message, void*) {
  std::cout << message << '\n' << std::flush;
}

// Options that take part in config files and the effective config dump.
class Settings {
 public:
  Settings(CLI::App* app, std::string command)
      : app_(app), command_(std::move(command)) {
    app_->add_option("--config", config_path_,
                     "JSON file with settings (flags take precedence)")
        ->check(CLI::ExistingFile);
  }

  template <typename T>
  CLI::Option* add(const std::string& name, T& ref, const std::string& help) {
    auto* opt = app_->add_option("--" + name, ref, help)->capture_default_str();
    entries_.push_back({name, opt, [&ref](const json& j) { ref = j.get<T>(); },
                        [&ref] { return json(ref); }});
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& ref,
                    const std::string& help) {
    auto* opt = app_->add_flag("--" + name, ref, help);
    entries_.push_back({name, opt, [&ref](const json& j) { ref = j.get<bool>(); },
                        [&ref] { return json(ref); }});
    return opt;
  }

  // Fills options not given on the command line from --config.
  void resolve() {
    if (config_path_.empty()) return;
    json j;
    try {
      j = json::parse(slurp(config_path_));
    } catch (const json::exception& e) {
      usage_error(config_path_ + ": " + e.what());
    }
    if (!j.is_object()) usage_error(config_path_ + ": expected a JSON object");
    if (j.contains("command") && j.contains("settings")) {
      if (j["command"] != command_)
        usage_error(config_path_ + " holds settings for '" +
                    j["command"].get<std::string>() + "', not '" + command_ +
                    "'");
      j = j["settings"];
    }
    for (const auto& [key, value] : j.items()) {
      auto it = std::find_if(entries_.begin(), entries_.end(),
                             [&](const Entry& e) { return e.name == key; });
      if (it == entries_.end())
        usage_error(config_path_ + ": unknown setting '" + key + "' for " +
                    command_);
      if (it->option->count() > 0) continue;
      try {
        it->load(value);
      } catch (const json::exception& e) {
        usage_error(config_path_ + ": setting '" + key + "': " + e.what());
      }
    }
  }

  void write(const fs::path& dir) const {
    json settings = json::object();
    for (const auto& e : entries_) settings[e.name] = e.dump();
    json j;
    j["command"] = command_;
    j["apcr_version"] = apcr_version();
    j["settings"] = settings;
    fs::create_directories(dir);
    std::ofstream out(dir / "config.json", std::ios::binary);
    out << j.dump(2) << '\n';
    if (!out) throw CliError(APCR_ERR_IO, "cannot write " +
                                              (dir / "config.json").string());
  }

 private:
  struct Entry {
    std::string name;
    CLI::Option* option;
    std::function<void(const json&)> load;
    std::function<json()> dump;
  };
  CLI::App* app_;
  std::string command_;
  std::string config_path_;
  std::vector<Entry> entries_;
};

// Model and objective flags shared by pretrain and sweep.
struct TrainFlags {
  apcr_train_config cfg{};
  std::string objective = "lm";
  std::string seed_mode = "per-layer";
  size_t dim = 0;  // 0: take D from the training corpus

  TrainFlags() { apcr_train_config_init(&cfg); }

  void add(Settings& s, bool with_window) {
    s.add("seed", cfg.seed, "random seed");
    s.add("epochs", cfg.epochs, "training epochs");
    s.add("batch-size", cfg.batch_size, "utterances per batch");
    s.add("lr", cfg.learning_rate, "Adam learning rate");
    s.add("lambda", cfg.lambda, "weight of the past-reconstruction loss");
    s.add("p-anchor", cfg.anchor_probability, "anchor sampling probability P");
    s.add("hidden", cfg.hidden, "GRU width H");
    s.add("layers", cfg.layers, "GRU layers");
    s.add("dim", dim, "feature dimension D (0: from the corpus)");
    s.add("clip-norm", cfg.clip_norm, "gradient clip norm (0: off)");
    s.add("val-fraction", cfg.validation_fraction,
          "held-out share when no --val corpus is given");
    s.add("seed-mode", seed_mode, "auxiliary stack seeding")
        ->check(CLI::IsMember({"per-layer", "last-layer"}));
    if (with_window) {
      s.add("n", cfg.horizon, "prediction horizon n");
      s.add("s", cfg.past_offset, "past window offset s");
      s.add("l", cfg.past_length, "past window length l");
      s.add("objective", objective, "training objective")
          ->check(CLI::IsMember({"lf", "lm"}));
    }
  }

  apcr_train_config resolve(size_t corpus_dim) {
    if (objective != "lf" && objective != "lm")
      usage_error("objective must be lf or lm, got '" + objective + "'");
    if (seed_mode != "per-layer" && seed_mode != "last-layer")
      usage_error("seed-mode must be per-layer or last-layer");
    cfg.objective = objective == "lm" ? APCR_OBJECTIVE_LM : APCR_OBJECTIVE_LF;
    cfg.seed_mode = seed_mode == "per-layer" ? APCR_SEED_PER_LAYER
                                             : APCR_SEED_LAST_LAYER_ALL;
    if (dim == 0) dim = corpus_dim;
    cfg.feature_dim = dim;
    return cfg;
  }
};

void require_dim(const apcr_corpus* c, size_t dim, const std::string& what) {
  if (apcr_corpus_dim(c) != dim)
    throw CliError(APCR_ERR_DIMENSION_MISMATCH,
                   what + " has D = " + std::to_string(apcr_corpus_dim(c)) +
                       ", expected " + std::to_string(dim));
}

// Runs `job(i)` for i in [0, count) on up to `threads` workers; the first
// failure wins.
void parallel_for(size_t count, size_t threads,
                  const std::function<void(size_t)>& job) {
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex m;
  auto worker = [&] {
    for (size_t i; (i = next++) < count;) {
      try {
        job(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  const size_t n = std::max<size_t>(1, std::min(threads, count));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

// ---- synth -------------------------------------------------------------

void add_synth(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("synth", "generate a labeled synthetic corpus");
  auto s = std::make_shared<Settings>(app, "synth");
  auto cfg = std::make_shared<apcr_synth_config>();
  apcr_synth_config_init(cfg.get());
  auto count = std::make_shared<size_t>(240);
  auto out = std::make_shared<std::string>();
  s->add("seed", cfg->seed, "random seed");
  s->add("count", *count, "number of utterances");
  s->add("classes", cfg->classes, "number of classes C");
  s->add("dim", cfg->dim, "frame dimension D");
  s->add("mean-duration", cfg->mean_duration, "mean segment length, frames");
  s->add("mean-scale", cfg->mean_scale, "distance of class means");
  s->add("noise", cfg->noise_scale, "per-dimension Gaussian noise std");
  s->add("min-length", cfg->min_length, "shortest utterance, frames");
  s->add("max-length", cfg->max_length, "longest utterance, frames");
  app->add_option("--out", *out, "output corpus directory")->required();
  app->callback([&run, s, cfg, count, out] {
    run = [s, cfg, count, out] {
      s->resolve();
      apcr_corpus* raw = nullptr;
      check(apcr_corpus_generate(cfg.get(), *count, &raw));
      CorpusPtr c(raw);
      s->write(*out);
      check(apcr_corpus_save(c.get(), out->c_str()));
      std::cout << "wrote " << apcr_corpus_size(c.get()) << " utterances ("
                << apcr_corpus_frames(c.get()) << " frames) to " << *out
                << '\n';
    };
  });
}

// ---- featurize ---------------------------------------------------------

void add_featurize(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("featurize", "convert WAV files to log-mel features");
  auto s = std::make_shared<Settings>(app, "featurize");
  auto cfg = std::make_shared<apcr_mel_config>();
  apcr_mel_config_init(cfg.get());
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto threads = std::make_shared<size_t>(1);
  s->add("sample-rate", cfg->sample_rate, "expected sample rate, Hz");
  s->add("window", cfg->window, "analysis window, samples");
  s->add("hop", cfg->hop, "frame hop, samples");
  s->add("fft-size", cfg->fft_size, "FFT length");
  s->add("mel-bins", cfg->mel_bins, "number of mel bands");
  s->add("f-min", cfg->f_min, "lowest band edge, Hz");
  s->add("f-max", cfg->f_max, "highest band edge, Hz");
  s->add("threads", *threads, "parallel files");
  app->add_option("--in", *in, "directory of .wav files")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--out", *out, "output corpus directory")->required();
  app->callback([&run, s, cfg, in, out, threads] {
    run = [s, cfg, in, out, threads] {
      s->resolve();
      check(apcr_mel_config_check(cfg.get()));
      std::vector<fs::path> wavs;
      for (const auto& e : fs::directory_iterator(*in)) {
        auto ext = e.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
        if (e.is_regular_file() && ext == ".wav") wavs.push_back(e.path());
      }
      std::sort(wavs.begin(), wavs.end());
      if (wavs.empty())
        throw CliError(APCR_ERR_IO, "no .wav files in " + *in);
      s->write(*out);
      parallel_for(wavs.size(), *threads, [&](size_t i) {
        const auto dst =
            fs::path(*out) / (wavs[i].stem().string() + ".pcrp");
        if (apcr_featurize_wav(wavs[i].c_str(), cfg.get(), dst.c_str()) !=
            APCR_OK)
          throw CliError(APCR_ERR_IO,
                         wavs[i].string() + ": " + apcr_last_error());
      });
      std::cout << "featurized " << wavs.size() << " files into " << *out
                << '\n';
    };
  });
}

// ---- pretrain ----------------------------------------------------------

void add_pretrain(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("pretrain", "train an APC encoder");
  auto s = std::make_shared<Settings>(app, "pretrain");
  auto f = std::make_shared<TrainFlags>();
  f->add(*s, true);
  auto train = std::make_shared<std::string>();
  auto val = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto resume = std::make_shared<bool>(false);
  auto threads = std::make_shared<size_t>(1);
  s->add("threads", *threads, "accepted for uniformity; training is serial");
  app->add_option("--train", *train, "training corpus directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--val", *val, "validation corpus directory")
      ->check(CLI::ExistingDirectory);
  app->add_option("--out", *out, "run directory")->required();
  app->add_flag("--resume", *resume, "continue from <out>/last.ckpt");
  app->callback([&run, s, f, train, val, out, resume] {
    run = [s, f, train, val, out, resume] {
      s->resolve();
      auto tc = load_corpus(*train);
      CorpusPtr vc;
      if (!val->empty()) vc = load_corpus(*val);
      const auto cfg = f->resolve(apcr_corpus_dim(tc.get()));
      check(apcr_train_config_check(&cfg));
      require_dim(tc.get(), cfg.feature_dim, "training corpus");
      if (vc) require_dim(vc.get(), cfg.feature_dim, "validation corpus");
      if (!*resume && fs::exists(fs::path(*out) / "last.ckpt"))
        usage_error(*out + " already holds a run; pass --resume to continue");
      s->write(*out);
      apcr_loss loss{};
      check(apcr_pretrain(tc.get(), vc.get(), &cfg, out->c_str(),
                          *resume ? 1 : 0, print_line, nullptr, nullptr,
                          &loss));
      std::printf("final validation: L_f %.6f  L_r %.6f  L_m %.6f\n", loss.lf,
                  loss.lr, loss.lm);
    };
  });
}

// ---- extract -----------------------------------------------------------

void add_extract(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("extract", "write encoder representations of a corpus");
  auto s = std::make_shared<Settings>(app, "extract");
  auto model = std::make_shared<std::string>();
  auto in = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto threads = std::make_shared<size_t>(1);
  s->add("model", *model, "checkpoint")->required()->check(CLI::ExistingFile);
  s->add("threads", *threads, "parallel utterances");
  app->add_option("--in", *in, "feature corpus directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--out", *out, "output corpus directory")->required();
  app->callback([&run, s, model, in, out, threads] {
    run = [s, model, in, out, threads] {
      s->resolve();
      auto m = load_model(*model);
      auto c = load_corpus(*in);
      apcr_corpus* raw = nullptr;
      check(apcr_model_extract_corpus(m.get(), c.get(), *threads, &raw));
      CorpusPtr reps(raw);
      s->write(*out);
      check(apcr_corpus_save(reps.get(), out->c_str()));
      std::cout << "extracted " << apcr_corpus_size(reps.get())
                << " utterances (H = " << apcr_corpus_dim(reps.get())
                << ") into " << *out << '\n';
    };
  });
}

// ---- probe -------------------------------------------------------------

struct ProbeInputs {
  std::string name;
  CorpusPtr train, validation, test;
};

void add_probe(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("probe", "time-shifted linear probe report");
  auto s = std::make_shared<Settings>(app, "probe");
  auto cfg = std::make_shared<apcr_probe_config>();
  apcr_probe_config_init(cfg.get());
  auto shifts = std::make_shared<std::vector<int>>(
      cfg->shifts, cfg->shifts + cfg->shift_count);
  auto epochs = std::make_shared<size_t>(cfg->epochs);
  auto lr = std::make_shared<double>(cfg->learning_rate);
  auto eval_every = std::make_shared<size_t>(cfg->eval_every);
  auto models = std::make_shared<std::vector<std::string>>();
  auto collapse = std::make_shared<std::string>();
  auto val_fraction = std::make_shared<double>(0.1);
  auto no_raw = std::make_shared<bool>(false);
  auto threads = std::make_shared<size_t>(1);
  auto train = std::make_shared<std::string>();
  auto val = std::make_shared<std::string>();
  auto test = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  s->add("shifts", *shifts, "label shifts w")->delimiter(',');
  s->add("epochs", *epochs, "probe training epochs");
  s->add("lr", *lr, "probe learning rate");
  s->add("eval-every", *eval_every, "epochs between validation checks");
  s->add("model", *models, "feature source NAME=CHECKPOINT (repeatable)");
  s->add("collapse", *collapse, "class collapse map file");
  s->add("val-fraction", *val_fraction,
         "share of --train held out for selection when no --val is given");
  s->flag("no-raw", *no_raw, "skip the raw-frame row");
  s->add("threads", *threads, "parallel utterances during extraction");
  app->add_option("--train", *train, "labeled probe training corpus")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--val", *val, "labeled probe validation corpus")
      ->check(CLI::ExistingDirectory);
  app->add_option("--test", *test, "labeled probe test corpus")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--out", *out, "report directory")->required();
  app->callback([=, &run] {
    run = [=] {
      s->resolve();
      if (shifts->empty()) usage_error("probe: no shifts");
      if (*no_raw && models->empty()) usage_error("probe: nothing to probe");
      auto tr = load_corpus(*train);
      auto te = load_corpus(*test);
      CorpusPtr va;
      if (!val->empty()) {
        va = load_corpus(*val);
      } else if (*val_fraction > 0) {
        apcr_corpus *kept = nullptr, *held = nullptr;
        check(apcr_corpus_split(tr.get(), *val_fraction, &kept, &held));
        tr.reset(kept);
        va.reset(held);
        if (apcr_corpus_size(va.get()) == 0) va.reset();
      }
      const size_t classes = apcr_corpus_label_classes(tr.get());
      if (classes == 0) usage_error("probe: training corpus has no labels");
      std::vector<uint16_t> map;
      if (!collapse->empty()) {
        map.resize(classes);
        check(apcr_collapse_map_read(collapse->c_str(), classes, map.data()));
      }

      struct Source {
        std::string name, path, bytes;
      };
      std::vector<Source> sources;
      for (const auto& m : *models) {
        const auto eq = m.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == m.size())
          usage_error("probe: --model expects NAME=CHECKPOINT, got '" + m + "'");
        sources.push_back({m.substr(0, eq), m.substr(eq + 1), {}});
        sources.back().bytes = slurp(sources.back().path);
      }

      std::vector<ProbeInputs> inputs;
      if (!*no_raw) {
        auto copy = [](const apcr_corpus* c) -> CorpusPtr {
          if (!c) return nullptr;
          apcr_corpus *all = nullptr, *none = nullptr;
          check(apcr_corpus_split(c, 0.0, &all, &none));
          apcr_corpus_free(none);
          return CorpusPtr(all);
        };
        inputs.push_back({"raw", copy(tr.get()), copy(va.get()), copy(te.get())});
      }
      for (const auto& src : sources) {
        auto model = load_model(src.path);
        auto extract = [&](const apcr_corpus* c) -> CorpusPtr {
          if (!c) return nullptr;
          apcr_corpus* raw = nullptr;
          check(apcr_model_extract_corpus(model.get(), c, *threads, &raw));
          return CorpusPtr(raw);
        };
        inputs.push_back({src.name, extract(tr.get()), extract(va.get()),
                          extract(te.get())});
      }

      apcr_probe_config pc = *cfg;
      pc.shifts = shifts->data();
      pc.shift_count = shifts->size();
      pc.classes = classes;
      pc.collapse = map.empty() ? nullptr : map.data();
      pc.epochs = *epochs;
      pc.learning_rate = *lr;
      pc.eval_every = *eval_every;
      std::vector<apcr_probe_source> api;
      for (const auto& in : inputs)
        api.push_back({in.name.c_str(), in.train.get(), in.validation.get(),
                       in.test.get()});
      std::vector<double> fer(api.size() * shifts->size());
      std::vector<size_t> frames(fer.size());
      s->write(*out);
      char* csv = nullptr;
      check(apcr_probe_report(api.data(), api.size(), &pc, fer.data(),
                              frames.data(), &csv));
      std::string text(csv);
      apcr_string_free(csv);

      // The encoders are frozen: their checkpoints must be untouched.
      for (const auto& src : sources) {
        if (slurp(src.path) != src.bytes)
          throw CliError(APCR_ERR_STATE,
                         "probe: checkpoint " + src.path + " changed");
      }
      std::ofstream f(fs::path(*out) / "probe_report.csv", std::ios::binary);
      f << text;
      if (!f) throw CliError(APCR_ERR_IO, "cannot write probe_report.csv");
      std::cout << text;
    };
  });
}

// ---- sweep -------------------------------------------------------------

void add_sweep(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("sweep", "train the (n, s, l) grid");
  auto s = std::make_shared<Settings>(app, "sweep");
  auto f = std::make_shared<TrainFlags>();
  f->add(*s, false);
  auto ns = std::make_shared<std::vector<size_t>>(
      std::vector<size_t>{1, 3, 5, 7, 9});
  auto ss = std::make_shared<std::vector<size_t>>(
      std::vector<size_t>{7, 14, 20});
  auto ls = std::make_shared<std::vector<size_t>>(std::vector<size_t>{3, 7});
  auto no_baseline = std::make_shared<bool>(false);
  auto overwrite = std::make_shared<bool>(false);
  auto threads = std::make_shared<size_t>(1);
  auto train = std::make_shared<std::string>();
  auto val = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  s->add("n", *ns, "horizons n")->delimiter(',');
  s->add("s", *ss, "past offsets s")->delimiter(',');
  s->add("l", *ls, "past window lengths l")->delimiter(',');
  s->flag("no-baseline", *no_baseline, "skip the L_f-only cell per n");
  s->flag("overwrite", *overwrite, "retrain incomplete or foreign cells");
  s->add("threads", *threads, "cells trained in parallel");
  app->add_option("--train", *train, "training corpus directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  app->add_option("--val", *val, "validation corpus directory")
      ->check(CLI::ExistingDirectory);
  app->add_option("--out", *out, "sweep directory")->required();
  app->callback([=, &run] {
    run = [=] {
      s->resolve();
      auto tc = load_corpus(*train);
      CorpusPtr vc;
      if (!val->empty()) vc = load_corpus(*val);
      apcr_sweep_config sc;
      apcr_sweep_config_init(&sc);
      sc.base = f->resolve(apcr_corpus_dim(tc.get()));
      require_dim(tc.get(), sc.base.feature_dim, "training corpus");
      if (vc) require_dim(vc.get(), sc.base.feature_dim, "validation corpus");
      std::vector<size_t> windows;
      for (auto sv : *ss)
        for (auto lv : *ls) {
          windows.push_back(sv);
          windows.push_back(lv);
        }
      sc.horizons = ns->data();
      sc.horizon_count = ns->size();
      sc.windows = windows.data();
      sc.window_count = windows.size() / 2;
      sc.include_baseline = *no_baseline ? 0 : 1;
      sc.overwrite = *overwrite ? 1 : 0;
      sc.threads = *threads;
      check(apcr_sweep_config_check(&sc));
      s->write(*out);
      check(apcr_sweep_run(tc.get(), vc.get(), &sc, out->c_str(), print_line,
                           nullptr));
      std::cout << slurp((fs::path(*out) / "summary.csv").string());
    };
  });
}

// ---- report ------------------------------------------------------------

void add_report(CLI::App& root, std::function<void()>& run) {
  auto* app = root.add_subcommand("report", "grouped-bar data and chart from a sweep summary");
  auto s = std::make_shared<Settings>(app, "report");
  auto summary = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  app->add_option("--summary", *summary, "summary.csv written by sweep")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--out", *out, "report directory")->required();
  app->callback([=, &run] {
    run = [=] {
      s->resolve();
      // The summary is parsed before anything is written.
      size_t missing = 0;
      check(apcr_report_fig2(summary->c_str(), out->c_str(), &missing));
      const std::string warning = apcr_last_error();
      s->write(*out);
      if (missing > 0)
        std::cerr << "warning: " << warning << '\n';
      std::cout << "wrote fig2_data.csv and fig2.svg to " << *out << '\n';
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"APC pretraining with past reconstruction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", apcr_version());
  std::function<void()> run;
  add_synth(app, run);
  add_featurize(app, run);
  add_pretrain(app, run);
  add_extract(app, run);
  add_probe(app, run);
  add_sweep(app, run);
  add_report(app, run);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  try {
    if (run) run();
  } catch (const CliError& e) {
    std::cerr << "error: " << apcr_status_string(e.status) << ": " << e.what()
              << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
