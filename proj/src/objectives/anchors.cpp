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

#include "objectives/objectives.hpp"

#include <cmath>

namespace apcr {

bool anchor_eligible(std::size_t anchor, std::size_t length,
                     const ObjectiveConfig& cfg) {
  if (anchor < 1 || anchor > length) return false;
  if (anchor < cfg.past_offset + 1) return false;
  const std::size_t last_target =
      anchor - cfg.past_offset + cfg.past_length - 1 + cfg.horizon;
  return last_target <= length;
}

AnchorSet sample_anchors(std::size_t length, const ObjectiveConfig& cfg,
                         Rng& rng) {
  AnchorSet out;
  if (cfg.anchor_probability <= 0) return out;
  for (std::size_t a = 1; a <= length; ++a) {
    if (!anchor_eligible(a, length, cfg)) continue;
    if (uniform01(rng) < cfg.anchor_probability) out.positions.push_back(a);
  }
  return out;
}

AnchorSet strided_anchors(std::size_t length, const ObjectiveConfig& cfg) {
  AnchorSet out;
  if (cfg.anchor_probability <= 0) return out;
  const auto stride = static_cast<std::size_t>(
      std::ceil(1.0 / cfg.anchor_probability - 1e-12));
  std::size_t seen = 0;
  for (std::size_t a = 1; a <= length; ++a) {
    if (!anchor_eligible(a, length, cfg)) continue;
    if (seen++ % stride == 0) out.positions.push_back(a);
  }
  return out;
}

Rng anchor_stream(std::uint64_t seed, std::uint64_t epoch,
                  std::string_view utterance_id) {
  return Rng(derive_seed(seed, epoch, stable_hash(utterance_id)));
}

}  // namespace apcr
