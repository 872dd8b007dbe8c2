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

#include "model/checkpoint.hpp"

#include <cmath>
#include <cstring>

#include "common/binary_io.hpp"

namespace apcr::model {

Normalizer Normalizer::identity(std::size_t dim) {
  return Normalizer{std::vector<float>(dim, 0.0f),
                    std::vector<float>(dim, 1.0f)};
}

Normalizer Normalizer::fit(std::span<const Tensor<float>* const> utterances) {
  require(!utterances.empty(), ErrorCode::kInvalidArgument,
          "normalizer: no training utterances");
  const std::size_t dim = utterances.front()->cols();
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  double count = 0;
  for (const Tensor<float>* u : utterances) {
    require(u->cols() == dim, ErrorCode::kDimensionMismatch,
            "normalizer: utterances disagree on feature dimension");
    for (std::size_t r = 0; r < u->rows(); ++r) {
      for (std::size_t c = 0; c < dim; ++c) {
        const double v = u->at(r, c);
        sum[c] += v;
        sum_sq[c] += v * v;
      }
    }
    count += static_cast<double>(u->rows());
  }
  Normalizer n;
  for (std::size_t c = 0; c < dim; ++c) {
    const double mean = sum[c] / count;
    const double var = std::max(0.0, sum_sq[c] / count - mean * mean);
    const double sd = std::sqrt(var);
    n.mean.push_back(static_cast<float>(mean));
    n.stddev.push_back(sd > 1e-6 ? static_cast<float>(sd) : 1.0f);
  }
  return n;
}

Tensor<float> Normalizer::apply(const Tensor<float>& frames) const {
  require(frames.cols() == dim(), ErrorCode::kDimensionMismatch,
          "normalizer: frames have dimension " + std::to_string(frames.cols()) +
              ", statistics have " + std::to_string(dim()));
  Tensor<float> out = frames;
  const std::size_t d = dim();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c)
      out[r * d + c] = (out[r * d + c] - mean[c]) / stddev[c];
  return out;
}

namespace {

void put_tensor_data(ByteWriter& w, const Tensor<float>& t) {
  w.put_span<float>(t.span());
}

void put_tensor(ByteWriter& w, const Tensor<float>& t) {
  w.put<std::uint8_t>(static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
  put_tensor_data(w, t);
}

void get_tensor(ByteReader& r, Tensor<float>& expected, std::size_t index) {
  const std::uint8_t rank = r.get<std::uint8_t>();
  num::Shape shape(rank);
  for (auto& e : shape) e = r.get<std::uint32_t>();
  require(shape == expected.shape(), ErrorCode::kDimensionMismatch,
          "checkpoint tensor " + std::to_string(index) + " has shape " +
              num::shape_string(shape) + ", configuration implies " +
              num::shape_string(expected.shape()));
  r.get_span<float>(expected.span());
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  const EncoderConfig& ec = ckpt.params.config;
  const ObjectiveConfig& oc = ckpt.objective;
  ByteWriter w;
  w.put_bytes(std::string_view(kCheckpointMagic, 4));
  w.put<std::uint16_t>(kCheckpointVersion);

  w.put<std::uint16_t>(static_cast<std::uint16_t>(ec.layers));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ec.hidden));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ec.feature_dim));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(oc.horizon));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(oc.past_offset));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(oc.past_length));
  w.put<double>(oc.anchor_probability);
  w.put<double>(oc.lambda);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(oc.seed_mode));
  w.put<std::uint8_t>(ec.projection_bias ? 1 : 0);
  w.put<std::uint64_t>(ckpt.init_seed);

  require(ckpt.normalizer.dim() == ec.feature_dim,
          ErrorCode::kDimensionMismatch,
          "checkpoint: normalizer dimension differs from model");
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.normalizer.dim()));
  w.put_span<float>(ckpt.normalizer.mean);
  w.put_span<float>(ckpt.normalizer.stddev);

  const auto tensors = ckpt.params.tensors();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor<float>* t : tensors) put_tensor(w, *t);

  w.put<std::uint8_t>(ckpt.training ? 1 : 0);
  if (ckpt.training) {
    const TrainingBlock& tb = *ckpt.training;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(tb.objective));
    w.put<std::uint64_t>(tb.seed);
    w.put<std::uint32_t>(tb.epochs_done);
    w.put<std::uint32_t>(tb.epochs);
    w.put<std::uint32_t>(tb.batch_size);
    w.put<float>(tb.learning_rate);
    w.put<float>(tb.clip_norm);
    const auto& adam = tb.adam;
    w.put<std::uint64_t>(adam.step);
    w.put<float>(adam.beta1);
    w.put<float>(adam.beta2);
    w.put<float>(adam.epsilon);
    w.put<float>(adam.learning_rate);
    const bool has_moments = !adam.first_moment.empty();
    w.put<std::uint8_t>(has_moments ? 1 : 0);
    if (has_moments) {
      require(adam.first_moment.size() == tensors.size(),
              ErrorCode::kDimensionMismatch,
              "checkpoint: optimizer moment count differs from parameters");
      for (const auto& m : adam.first_moment) put_tensor_data(w, m);
      for (const auto& v : adam.second_moment) put_tensor_data(w, v);
    }
  }
  return w.bytes();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes,
                             const std::string& context) {
  ByteReader r(bytes, context);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
    fail(ErrorCode::kBadMagic, context + ": not a checkpoint (bad magic)");
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  require(version == kCheckpointVersion, ErrorCode::kVersionMismatch,
          context + ": checkpoint version " + std::to_string(version) +
              " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");

  Checkpoint ckpt;
  EncoderConfig ec;
  ec.layers = r.get<std::uint16_t>();
  ec.hidden = r.get<std::uint32_t>();
  ec.feature_dim = r.get<std::uint32_t>();
  ObjectiveConfig& oc = ckpt.objective;
  oc.horizon = r.get<std::uint32_t>();
  oc.past_offset = r.get<std::uint32_t>();
  oc.past_length = r.get<std::uint32_t>();
  oc.anchor_probability = r.get<double>();
  oc.lambda = r.get<double>();
  const auto seed_mode = r.get<std::uint8_t>();
  require(seed_mode <= 1, ErrorCode::kCorrupt, context + ": unknown seed mode");
  oc.seed_mode = static_cast<SeedMode>(seed_mode);
  const auto bias = r.get<std::uint8_t>();
  require(bias <= 1, ErrorCode::kCorrupt, context + ": bad bias flag");
  ec.projection_bias = bias == 1;
  ckpt.init_seed = r.get<std::uint64_t>();
  require(ec.layers >= 1 && ec.hidden >= 1 && ec.feature_dim >= 1,
          ErrorCode::kCorrupt, context + ": zero-sized model configuration");

  const auto dim = r.get<std::uint32_t>();
  require(dim == ec.feature_dim, ErrorCode::kDimensionMismatch,
          context + ": normalizer dimension differs from model");
  ckpt.normalizer.mean.resize(dim);
  ckpt.normalizer.stddev.resize(dim);
  r.get_span<float>(ckpt.normalizer.mean);
  r.get_span<float>(ckpt.normalizer.stddev);

  ckpt.params = EncoderParams<float>::zeros(ec);
  auto tensors = ckpt.params.tensors();
  const auto count = r.get<std::uint32_t>();
  require(count == tensors.size(), ErrorCode::kDimensionMismatch,
          context + ": " + std::to_string(count) +
              " parameter tensors, configuration implies " +
              std::to_string(tensors.size()));
  for (std::size_t i = 0; i < tensors.size(); ++i) get_tensor(r, *tensors[i], i);

  const auto has_training = r.get<std::uint8_t>();
  require(has_training <= 1, ErrorCode::kCorrupt,
          context + ": bad training-state flag");
  if (has_training) {
    TrainingBlock tb;
    const auto objective = r.get<std::uint8_t>();
    require(objective <= 1, ErrorCode::kCorrupt, context + ": unknown objective");
    tb.objective = static_cast<Objective>(objective);
    tb.seed = r.get<std::uint64_t>();
    tb.epochs_done = r.get<std::uint32_t>();
    tb.epochs = r.get<std::uint32_t>();
    tb.batch_size = r.get<std::uint32_t>();
    tb.learning_rate = r.get<float>();
    tb.clip_norm = r.get<float>();
    tb.adam.step = r.get<std::uint64_t>();
    tb.adam.beta1 = r.get<float>();
    tb.adam.beta2 = r.get<float>();
    tb.adam.epsilon = r.get<float>();
    tb.adam.learning_rate = r.get<float>();
    const auto has_moments = r.get<std::uint8_t>();
    require(has_moments <= 1, ErrorCode::kCorrupt,
            context + ": bad moment flag");
    if (has_moments) {
      for (auto* moments : {&tb.adam.first_moment, &tb.adam.second_moment}) {
        for (const Tensor<float>* t : tensors) {
          Tensor<float> m = Tensor<float>::zeros_like(*t);
          r.get_span<float>(m.span());
          moments->push_back(std::move(m));
        }
      }
    }
    ckpt.training = std::move(tb);
  }
  require(r.remaining() == 0, ErrorCode::kCorrupt,
          context + ": " + std::to_string(r.remaining()) +
              " unexpected trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint) {
  write_file(path, encode_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::string& path,
                           std::optional<std::size_t> expected_feature_dim) {
  const auto bytes = read_file(path);
  Checkpoint ckpt = decode_checkpoint(bytes, path);
  if (expected_feature_dim) {
    require(ckpt.params.config.feature_dim == *expected_feature_dim,
            ErrorCode::kDimensionMismatch,
            path + ": model feature dimension " +
                std::to_string(ckpt.params.config.feature_dim) +
                " but data has " + std::to_string(*expected_feature_dim));
  }
  return ckpt;
}

}  // namespace apcr::model
