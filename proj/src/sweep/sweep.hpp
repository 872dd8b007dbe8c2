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

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trainer/trainer.hpp"

namespace apcr::sweep {

// One grid cell: the future-only baseline "(-,-)" or L_m with a (s, l)
// past window, at horizon n.
struct SweepCell {
  std::size_t horizon = 1;
  std::optional<std::pair<std::size_t, std::size_t>> window;

  bool baseline() const { return !window.has_value(); }
  std::string dir_name() const;  // n5_baseline, n5_s7_l3
  trainer::TrainConfig config(const trainer::TrainConfig& base) const;
};

struct SweepSpec {
  std::vector<std::size_t> horizons{1, 3, 5, 7, 9};
  std::vector<std::pair<std::size_t, std::size_t>> windows{
      {7, 3}, {7, 7}, {14, 3}, {14, 7}, {20, 3}, {20, 7}};
  bool include_baseline = true;
  trainer::TrainConfig base;
  std::string out_dir;
  bool overwrite = false;  // replace cells whose directories are damaged
  std::size_t threads = 1;

  void validate() const;
  // Grouped by n; the baseline first, then windows in the given order.
  std::vector<SweepCell> cells() const;
};

struct SummaryRow {
  std::size_t n = 0;
  std::optional<std::size_t> s, l;  // empty for the baseline
  Objective objective = Objective::kLf;
  double val_lf = 0;
  double val_lr = 0;  // 0 for the baseline by convention

  bool baseline() const { return !s.has_value(); }
  bool operator==(const SummaryRow&) const = default;
};

using Progress = std::function<void(const std::string& message)>;

// Trains every missing cell and writes <out>/summary.csv. Completed cells
// (a directory with a finished last.ckpt) are skipped; cells are trained
// in <out>/.partial_<cell> and renamed when done, so an interrupted cell
// resumes from its last epoch. A cell directory that exists but does not
// hold a finished checkpoint is refused unless overwrite is set.
std::vector<SummaryRow> run_sweep(const frontend::Corpus& train,
                                  const frontend::Corpus* validation,
                                  const SweepSpec& spec,
                                  const Progress& progress = {});

std::string format_summary_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> parse_summary_csv(const std::string& text);

struct Fig2Bar {
  std::size_t n = 0;
  std::optional<std::pair<std::size_t, std::size_t>> window;  // empty = (-,-)
  std::optional<double> val_lf, val_lr;  // empty = missing cell
};

struct Fig2Data {
  std::vector<std::size_t> groups;
  std::vector<std::optional<std::pair<std::size_t, std::size_t>>> series;
  std::vector<Fig2Bar> bars;  // groups x series, group-major
  std::vector<std::string> missing;
};

// Groups by n, one series per (s, l) plus the baseline; the baseline's
// L_r is 0. Cells absent from the summary become gaps and are listed in
// `missing`.
Fig2Data fig2_data(const std::vector<SummaryRow>& rows);
std::string format_fig2_csv(const Fig2Data& data);
// Two grouped-bar panels: validation L_r (left) and L_f (right).
std::string render_fig2_svg(const Fig2Data& data);

}  // namespace apcr::sweep
