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

#include "probe/probe.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "common/binary_io.hpp"
#include "numcore/adam.hpp"
#include "numcore/ops.hpp"

namespace apcr::probe {

void ProbeConfig::validate() const {
  require(classes >= 1 && classes <= 0xFFFF, ErrorCode::kInvalidArgument,
          "probe: class count must be positive");
  require(!shifts.empty(), ErrorCode::kInvalidArgument, "probe: no shifts");
  require(learning_rate > 0, ErrorCode::kInvalidArgument,
          "probe: learning rate must be positive");
  require(eval_every > 0, ErrorCode::kInvalidArgument,
          "probe: eval_every must be positive");
  if (collapse) check_collapse_map(*collapse, classes);
}

std::vector<std::pair<std::size_t, std::uint16_t>> shift_labels(
    const std::vector<std::uint16_t>& labels, int w) {
  const long n = static_cast<long>(labels.size());
  require(std::abs(static_cast<long>(w)) < n, ErrorCode::kInvalidArgument,
          "shift " + std::to_string(w) + " needs more than " +
              std::to_string(n) + " frames");
  std::vector<std::pair<std::size_t, std::uint16_t>> out;
  out.reserve(static_cast<std::size_t>(n - std::abs(static_cast<long>(w))));
  for (long t = 0; t < n; ++t) {
    const long s = t + w;
    if (s >= 0 && s < n)
      out.emplace_back(static_cast<std::size_t>(t), labels[static_cast<std::size_t>(s)]);
  }
  return out;
}

LinearClassifier LinearClassifier::zeros(std::size_t classes,
                                         std::size_t dim) {
  LinearClassifier c;
  c.classes = classes;
  c.dim = dim;
  c.weights = Tensor<double>::matrix(classes, dim);
  c.bias.assign(classes, 0.0);
  c.mean.assign(dim, 0.0);
  c.inv_std.assign(dim, 1.0);
  return c;
}

std::vector<double> LinearClassifier::logits(const float* row) const {
  std::vector<double> out(bias);
  for (std::size_t c = 0; c < classes; ++c) {
    const double* w = weights.data() + c * dim;
    double acc = 0;
    for (std::size_t j = 0; j < dim; ++j)
      acc += w[j] * ((row[j] - mean[j]) * inv_std[j]);
    out[c] += acc;
  }
  return out;
}

std::vector<double> LinearClassifier::probabilities(const float* row) const {
  auto z = logits(row);
  const double peak = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (auto& v : z) total += (v = std::exp(v - peak));
  for (auto& v : z) v /= total;
  return z;
}

std::size_t LinearClassifier::predict(const float* row) const {
  const auto z = logits(row);
  std::size_t best = 0;
  for (std::size_t c = 1; c < z.size(); ++c)
    if (z[c] > z[best]) best = c;
  return best;
}

namespace {

struct Design {
  Tensor<double> x;  // standardized rows
  std::vector<int> y;
};

std::size_t feature_dim(const std::vector<LabeledSequence>& data) {
  require(!data.empty(), ErrorCode::kInvalidArgument, "probe: no data");
  const std::size_t h = data.front().features->cols();
  for (const auto& s : data) {
    require(s.features && s.labels, ErrorCode::kInvalidArgument,
            "probe: missing features or labels");
    require(s.features->cols() == h, ErrorCode::kDimensionMismatch,
            "probe: feature dimensions differ");
    require(s.labels->size() == s.features->rows(),
            ErrorCode::kDimensionMismatch,
            "probe: label track length differs from feature length");
  }
  return h;
}

Design design(const std::vector<LabeledSequence>& data, int shift,
              const LinearClassifier& c, std::size_t classes) {
  std::size_t rows = 0;
  for (const auto& s : data) {
    const long n = static_cast<long>(s.labels->size());
    if (std::abs(static_cast<long>(shift)) < n)
      rows += static_cast<std::size_t>(n - std::abs(static_cast<long>(shift)));
  }
  require(rows > 0, ErrorCode::kInvalidArgument,
          "probe: no frames survive shift " + std::to_string(shift));
  Design d{Tensor<double>::matrix(rows, c.dim), {}};
  d.y.reserve(rows);
  std::size_t r = 0;
  for (const auto& s : data) {
    if (std::abs(static_cast<long>(shift)) >=
        static_cast<long>(s.labels->size()))
      continue;  // the whole utterance drops at this shift
    for (auto [t, label] : shift_labels(*s.labels, shift)) {
      require(label < classes, ErrorCode::kInvalidArgument,
              "probe: label " + std::to_string(label) + " outside [0, " +
                  std::to_string(classes) + ")");
      const float* f = s.features->data() + t * c.dim;
      for (std::size_t j = 0; j < c.dim; ++j)
        d.x.at(r, j) = (f[j] - c.mean[j]) * c.inv_std[j];
      d.y.push_back(label);
      ++r;
    }
  }
  return d;
}

}  // namespace

LinearClassifier train_probe(const std::vector<LabeledSequence>& train,
                             const std::vector<LabeledSequence>& validation,
                             int shift, const ProbeConfig& cfg) {
  cfg.validate();
  const std::size_t h = feature_dim(train);
  LinearClassifier clf = LinearClassifier::zeros(cfg.classes, h);
  if (cfg.standardize) {
    std::vector<double> sum(h, 0.0), sq(h, 0.0);
    double n = 0;
    for (const auto& s : train) {
      for (std::size_t t = 0; t < s.features->rows(); ++t) {
        const float* f = s.features->data() + t * h;
        for (std::size_t j = 0; j < h; ++j) {
          sum[j] += f[j];
          sq[j] += double(f[j]) * f[j];
        }
      }
      n += static_cast<double>(s.features->rows());
    }
    for (std::size_t j = 0; j < h; ++j) {
      clf.mean[j] = sum[j] / n;
      const double var = std::max(0.0, sq[j] / n - clf.mean[j] * clf.mean[j]);
      clf.inv_std[j] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    }
  }
  const Design d = design(train, shift, clf, cfg.classes);
  const std::size_t m = d.y.size();
  const std::vector<double> row_weights(m, 1.0 / static_cast<double>(m));

  Tensor<double> bias = Tensor<double>::matrix(1, cfg.classes);
  num::AdamState<double> adam;
  adam.learning_rate = cfg.learning_rate;
  LinearClassifier best = clf;
  double best_fer = INFINITY;
  auto consider = [&] {
    if (validation.empty()) return;
    const double fer = evaluate_fer(clf, validation, shift, cfg.collapse).fer();
    if (fer < best_fer) {
      best_fer = fer;
      best = clf;
    }
  };
  consider();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    num::Tape<double> tape;
    auto w = tape.leaf(clf.weights);
    auto b = tape.leaf(bias);
    auto x = tape.constant(d.x);
    auto logits = num::add_row(num::matmul_nt(x, w), b);
    auto loss = num::softmax_cross_entropy(logits, d.y, row_weights);
    std::vector<num::Var<double>> leaves{w, b};
    auto grads = num::reverse_gradients<double>(tape, loss, leaves);
    Tensor<double>* params[] = {&clf.weights, &bias};
    num::adam_step<double>(adam, params, grads);
    clf.bias.assign(bias.storage().begin(), bias.storage().end());
    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) consider();
  }
  return validation.empty() ? clf : best;
}

FerResult evaluate_fer(const LinearClassifier& classifier,
                       const std::vector<LabeledSequence>& data, int shift,
                       const std::optional<std::vector<std::uint16_t>>& collapse) {
  if (collapse) check_collapse_map(*collapse, classifier.classes);
  FerResult r;
  for (const auto& s : data) {
    require(s.features->cols() == classifier.dim,
            ErrorCode::kDimensionMismatch,
            "probe: features do not match the classifier");
    if (std::abs(static_cast<long>(shift)) >=
        static_cast<long>(s.labels->size()))
      continue;
    for (auto [t, label] : shift_labels(*s.labels, shift)) {
      require(label < classifier.classes, ErrorCode::kInvalidArgument,
              "probe: label outside the classifier's classes");
      std::size_t pred = classifier.predict(s.features->data() + t * classifier.dim);
      std::size_t ref = label;
      if (collapse) {
        pred = (*collapse)[pred];
        ref = (*collapse)[ref];
      }
      r.errors += pred != ref;
      r.total += 1;
    }
  }
  return r;
}

void check_collapse_map(const std::vector<std::uint16_t>& map,
                        std::size_t classes) {
  require(map.size() == classes, ErrorCode::kInvalidArgument,
          "collapse map covers " + std::to_string(map.size()) +
              " classes, expected " + std::to_string(classes));
}

std::vector<std::uint16_t> parse_collapse_map(const std::string& text,
                                              std::size_t classes) {
  std::vector<long> map(classes, -1);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    long src, dst;
    if (!(ls >> src)) continue;  // blank line
    std::string extra;
    require(static_cast<bool>(ls >> dst) && !(ls >> extra),
            ErrorCode::kInvalidArgument,
            "collapse map line " + std::to_string(line_no) +
                ": expected two integers");
    require(src >= 0 && static_cast<std::size_t>(src) < classes && dst >= 0 &&
                dst <= 0xFFFF,
            ErrorCode::kInvalidArgument,
            "collapse map line " + std::to_string(line_no) +
                ": class out of range");
    require(map[src] < 0, ErrorCode::kInvalidArgument,
            "collapse map: class " + std::to_string(src) + " mapped twice");
    map[src] = dst;
  }
  std::vector<std::uint16_t> out;
  for (std::size_t c = 0; c < classes; ++c) {
    require(map[c] >= 0, ErrorCode::kInvalidArgument,
            "collapse map is not total: class " + std::to_string(c) +
                " missing");
    out.push_back(static_cast<std::uint16_t>(map[c]));
  }
  return out;
}

std::vector<std::uint16_t> read_collapse_map(const std::string& path,
                                             std::size_t classes) {
  const auto bytes = read_file(path);
  return parse_collapse_map(std::string(bytes.begin(), bytes.end()), classes);
}

std::vector<ReportRow> run_probe_report(const std::vector<ProbeSource>& sources,
                                        const ProbeConfig& cfg) {
  cfg.validate();
  std::vector<ReportRow> rows;
  for (const auto& src : sources) {
    ReportRow row{src.name, {}};
    for (int w : cfg.shifts) {
      auto clf = train_probe(src.train, src.validation, w, cfg);
      row.per_shift.push_back(evaluate_fer(clf, src.test, w, cfg.collapse));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_report_csv(const std::vector<ReportRow>& rows,
                              const std::vector<int>& shifts) {
  std::string out = "features";
  for (int w : shifts) {
    out += ",";
    out += (w > 0 ? "+" : "") + std::to_string(w);
  }
  out += "\n";
  for (const auto& r : rows) {
    require(r.per_shift.size() == shifts.size(), ErrorCode::kInvalidArgument,
            "report row does not match the shift list");
    out += r.source;
    for (const auto& f : r.per_shift) {
      char buf[32];
      std::snprintf(buf, sizeof buf, ",%.1f", 100.0 * f.fer());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace apcr::probe
