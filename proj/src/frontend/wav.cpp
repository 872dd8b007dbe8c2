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

#include "frontend/wav.hpp"

#include <algorithm>
#include <cmath>

#include "common/binary_io.hpp"

namespace apcr::frontend {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WavAudio decode_wav(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "wav");
  require(bytes.size() >= 12 && r.get_bytes(4) == "RIFF",
          ErrorCode::kBadMagic, "wav: missing RIFF header");
  r.get<std::uint32_t>();
  require(r.get_bytes(4) == "WAVE", ErrorCode::kBadMagic,
          "wav: missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  WavAudio audio;
  while (r.remaining() >= 8) {
    const std::string id = r.get_bytes(4);
    const auto size = r.get<std::uint32_t>();
    require(size <= r.remaining(), ErrorCode::kTruncatedPayload,
            "wav: chunk '" + id + "' runs past end of file");
    std::string body = r.get_bytes(size);
    if (size % 2 == 1 && r.remaining() > 0) r.get<std::uint8_t>();
    ByteReader c(std::span(reinterpret_cast<const std::uint8_t*>(body.data()),
                           body.size()),
                 "wav " + id);
    if (id == "fmt ") {
      format = c.get<std::uint16_t>();
      channels = c.get<std::uint16_t>();
      audio.sample_rate = c.get<std::uint32_t>();
      c.get<std::uint32_t>();  // byte rate
      c.get<std::uint16_t>();  // block align
      bits = c.get<std::uint16_t>();
      if (format == kFormatExtensible) {
        c.get<std::uint16_t>();  // cbSize
        c.get<std::uint16_t>();  // valid bits
        c.get<std::uint32_t>();  // channel mask
        format = c.get<std::uint16_t>();  // first two bytes of the GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorCode::kCorrupt, "wav: data chunk before fmt");
      require(channels == 1, ErrorCode::kUnsupported,
              "wav: only mono audio is supported (got " +
                  std::to_string(channels) + " channels)");
      require(audio.sample_rate > 0, ErrorCode::kCorrupt,
              "wav: sample rate is 0");
      if (format == kFormatPcm && bits == 16) {
        audio.samples.resize(size / 2);
        for (auto& s : audio.samples)
          s = static_cast<float>(c.get<std::int16_t>()) / 32768.0f;
      } else if (format == kFormatFloat && bits == 32) {
        audio.samples.resize(size / 4);
        c.get_span<float>(audio.samples);
      } else {
        fail(ErrorCode::kUnsupported,
             "wav: unsupported encoding (format " + std::to_string(format) +
                 ", " + std::to_string(bits) +
                 " bits); expected 16-bit PCM or 32-bit float");
      }
      require(!audio.samples.empty(), ErrorCode::kCorrupt,
              "wav: no samples");
      return audio;
    }
  }
  fail(ErrorCode::kCorrupt, "wav: no data chunk");
}

WavAudio read_wav(const std::string& path) {
  try {
    return decode_wav(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav_pcm16(const WavAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  ByteWriter w;
  w.put_bytes("RIFF");
  w.put<std::uint32_t>(36 + data_bytes);
  w.put_bytes("WAVE");
  w.put_bytes("fmt ");
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(kFormatPcm);
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(audio.sample_rate);
  w.put<std::uint32_t>(audio.sample_rate * 2);
  w.put<std::uint16_t>(2);
  w.put<std::uint16_t>(16);
  w.put_bytes("data");
  w.put<std::uint32_t>(data_bytes);
  for (float s : audio.samples) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    w.put<std::int16_t>(static_cast<std::int16_t>(
        std::lround(std::min(c * 32768.0f, 32767.0f))));
  }
  return w.bytes();
}

void write_wav_pcm16(const std::string& path, const WavAudio& audio) {
  write_file(path, encode_wav_pcm16(audio));
}

}  // namespace apcr::frontend
