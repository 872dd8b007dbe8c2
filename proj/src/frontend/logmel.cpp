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

#include "frontend/logmel.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

namespace apcr::frontend {
namespace {

// FFTW planning is not thread-safe; execution with a private plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace

void MelConfig::validate() const {
  require(sample_rate > 0 && window > 0 && hop > 0 && fft_size > 0 &&
              mel_bins > 0 && log_floor > 0,
          ErrorCode::kInvalidArgument, "mel config values must be positive");
  require(fft_size >= window, ErrorCode::kInvalidArgument,
          "fft size must be at least the window length");
  require(f_min >= 0 && f_max > f_min && f_max <= sample_rate / 2.0,
          ErrorCode::kInvalidArgument,
          "mel frequency range must satisfy 0 <= f_min < f_max <= rate/2");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> mel_edges(const MelConfig& cfg) {
  const double lo = hz_to_mel(cfg.f_min), hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.mel_bins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.mel_bins + 1));
  }
  return edges;
}

std::vector<double> mel_center_frequencies(const MelConfig& cfg) {
  auto e = mel_edges(cfg);
  return std::vector<double>(e.begin() + 1, e.end() - 1);
}

Tensor<double> mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const auto edges = mel_edges(cfg);
  Tensor<double> fb = Tensor<double>::matrix(cfg.mel_bins, bins);
  for (std::size_t m = 0; m < cfg.mel_bins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate /
                       static_cast<double>(cfg.fft_size);
      double w = 0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

std::size_t frame_count(std::size_t samples, std::size_t window,
                        std::size_t hop) {
  require(window > 0 && hop > 0, ErrorCode::kInvalidArgument,
          "window and hop must be positive");
  require(samples >= window, ErrorCode::kInvalidArgument,
          "audio of " + std::to_string(samples) +
              " samples is shorter than one window (" +
              std::to_string(window) + ")");
  return 1 + (samples - window) / hop;
}

FeatureMatrix log_mel_spectrogram(const WavAudio& audio, const MelConfig& cfg) {
  cfg.validate();
  require(audio.sample_rate == cfg.sample_rate, ErrorCode::kInvalidArgument,
          "audio sample rate " + std::to_string(audio.sample_rate) +
              " does not match the configured " +
              std::to_string(cfg.sample_rate));
  const std::size_t frames = frame_count(audio.samples.size(), cfg.window,
                                         cfg.hop);
  const std::size_t bins = cfg.fft_size / 2 + 1;
  const Tensor<double> fb = mel_filterbank(cfg);

  std::vector<double> window(cfg.window);
  for (std::size_t i = 0; i < cfg.window; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi *
                                     static_cast<double>(i) /
                                     static_cast<double>(cfg.window));
  }

  std::unique_ptr<double, decltype(&fftw_free)> in(
      fftw_alloc_real(cfg.fft_size), &fftw_free);
  std::unique_ptr<fftw_complex, decltype(&fftw_free)> out(
      fftw_alloc_complex(bins), &fftw_free);
  std::unique_ptr<fftw_plan_s, PlanDeleter> plan;
  {
    std::lock_guard lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(cfg.fft_size), in.get(),
                                    out.get(), FFTW_ESTIMATE));
  }
  require(plan != nullptr, ErrorCode::kUnsupported, "fftw planning failed");

  FeatureMatrix m;
  m.frames = Tensor<float>::matrix(frames, cfg.mel_bins);
  m.frame_period_us = static_cast<std::uint32_t>(
      std::llround(1e6 * static_cast<double>(cfg.hop) / cfg.sample_rate));
  std::vector<double> power(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const float* x = audio.samples.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.fft_size; ++i) {
      in.get()[i] = i < cfg.window ? window[i] * x[i] : 0.0;
    }
    fftw_execute(plan.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0], im = out.get()[k][1];
      power[k] = re * re + im * im;
    }
    for (std::size_t b = 0; b < cfg.mel_bins; ++b) {
      double e = 0;
      const double* w = fb.data() + b * bins;
      for (std::size_t k = 0; k < bins; ++k) e += w[k] * power[k];
      m.frames.at(t, b) = static_cast<float>(std::log(e + cfg.log_floor));
    }
  }
  return m;
}

}  // namespace apcr::frontend
