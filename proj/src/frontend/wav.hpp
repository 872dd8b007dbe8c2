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
#include <string>
#include <vector>

namespace apcr::frontend {

// Mono audio in [-1, 1].
struct WavAudio {
  std::uint32_t sample_rate = 16000;
  std::vector<float> samples;
};

// Accepts RIFF/WAVE with PCM 16-bit or IEEE float 32-bit mono data
// (WAVE_FORMAT_EXTENSIBLE wrapping either is accepted too).
WavAudio decode_wav(std::span<const std::uint8_t> bytes);
WavAudio read_wav(const std::string& path);

// Writes 16-bit PCM, clipping to [-1, 1].
std::vector<std::uint8_t> encode_wav_pcm16(const WavAudio& audio);
void write_wav_pcm16(const std::string& path, const WavAudio& audio);

}  // namespace apcr::frontend
