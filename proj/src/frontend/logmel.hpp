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

#include <vector>

#include "frontend/features.hpp"
#include "frontend/wav.hpp"

namespace apcr::frontend {

struct MelConfig {
  std::uint32_t sample_rate = 16000;
  std::size_t window = 400;
  std::size_t hop = 160;
  std::size_t fft_size = 512;
  std::size_t mel_bins = 80;
  double f_min = 0;
  double f_max = 8000;
  double log_floor = 1e-10;

  void validate() const;
};

double hz_to_mel(double hz);  // HTK: 2595 log10(1 + f/700)
double mel_to_hz(double mel);

// mel_bins + 2 edge frequencies in Hz; filter i spans edges i..i+2 and
// peaks at edge i+1.
std::vector<double> mel_edges(const MelConfig& cfg);
std::vector<double> mel_center_frequencies(const MelConfig& cfg);

// [mel_bins, fft_size/2 + 1] triangular weights over FFT bin frequencies.
Tensor<double> mel_filterbank(const MelConfig& cfg);

// 1 + floor((samples - window) / hop)
std::size_t frame_count(std::size_t samples, std::size_t window,
                        std::size_t hop);

// Periodic Hann window, power spectrum, triangular mel filters,
// ln(energy + floor). Frames are D = mel_bins wide.
FeatureMatrix log_mel_spectrogram(const WavAudio& audio, const MelConfig& cfg);

}  // namespace apcr::frontend
