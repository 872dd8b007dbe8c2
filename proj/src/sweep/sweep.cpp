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

#include "sweep/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <mutex>
#include <sstream>
#include <thread>

#include "common/binary_io.hpp"

namespace apcr::sweep {

namespace fs = std::filesystem;

namespace {

// Shortest text that parses back to the same double.
std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string SweepCell::dir_name() const {
  std::string name = "n" + std::to_string(horizon);
  if (baseline()) return name + "_baseline";
  return name + "_s" + std::to_string(window->first) + "_l" +
         std::to_string(window->second);
}

trainer::TrainConfig SweepCell::config(const trainer::TrainConfig& base) const {
  trainer::TrainConfig cfg = base;
  cfg.objective_cfg.horizon = horizon;
  if (baseline()) {
    cfg.objective = Objective::kLf;
  } else {
    cfg.objective = Objective::kLm;
    cfg.objective_cfg.past_offset = window->first;
    cfg.objective_cfg.past_length = window->second;
  }
  return cfg;
}

void SweepSpec::validate() const {
  require(!horizons.empty(), ErrorCode::kInvalidArgument,
          "sweep: no horizons");
  require(include_baseline || !windows.empty(), ErrorCode::kInvalidArgument,
          "sweep: grid is empty");
  require(!out_dir.empty(), ErrorCode::kInvalidArgument,
          "sweep: output directory required");
  require(threads >= 1, ErrorCode::kInvalidArgument,
          "sweep: threads must be >= 1");
  for (const auto& c : cells()) c.config(base).validate();
}

std::vector<SweepCell> SweepSpec::cells() const {
  std::vector<SweepCell> out;
  for (auto n : horizons) {
    if (include_baseline) out.push_back(SweepCell{n, std::nullopt});
    for (const auto& w : windows) out.push_back(SweepCell{n, w});
  }
  return out;
}

namespace {

enum class CellState { kAbsent, kComplete, kDamaged };

CellState inspect(const fs::path& dir, const trainer::TrainConfig& cfg) {
  if (!fs::exists(dir)) return CellState::kAbsent;
  try {
    const auto ckpt = model::load_checkpoint((dir / "last.ckpt").string(),
                                             cfg.encoder.feature_dim);
    const bool done = ckpt.training && ckpt.training->epochs_done >= cfg.epochs &&
                      ckpt.objective == cfg.objective_cfg &&
                      ckpt.training->objective == cfg.objective &&
                      ckpt.training->seed == cfg.seed &&
                      ckpt.params.config == cfg.encoder;
    return done ? CellState::kComplete : CellState::kDamaged;
  } catch (const Error&) {
    return CellState::kDamaged;
  }
}

SummaryRow summarize(const SweepCell& cell, const trainer::TrainConfig& cfg,
                     const fs::path& dir, const frontend::Corpus& val) {
  const auto ckpt = model::load_checkpoint((dir / "last.ckpt").string(),
                                           cfg.encoder.feature_dim);
  const auto stats = trainer::validate(
      ckpt.params, trainer::prepare(val, ckpt.normalizer), cfg);
  SummaryRow row;
  row.n = cell.horizon;
  row.objective = cfg.objective;
  row.val_lf = stats.lf_mean();
  if (!cell.baseline()) {
    row.s = cell.window->first;
    row.l = cell.window->second;
    row.val_lr = stats.lr_mean();
  }
  return row;
}

}  // namespace

std::vector<SummaryRow> run_sweep(const frontend::Corpus& train,
                                  const frontend::Corpus* validation,
                                  const SweepSpec& spec,
                                  const Progress& progress) {
  spec.validate();
  require(!train.empty(), ErrorCode::kInvalidArgument,
          "sweep: training corpus is empty");
  require(train.dim() == spec.base.encoder.feature_dim,
          ErrorCode::kDimensionMismatch,
          "sweep: corpus has D = " + std::to_string(train.dim()) +
              " but the model expects " +
              std::to_string(spec.base.encoder.feature_dim));
  frontend::Corpus train_split, val_split;
  if (validation) {
    train_split = train;
    val_split = *validation;
  } else {
    std::tie(train_split, val_split) =
        frontend::split_by_hash(train, spec.base.validation_fraction);
  }
  require(!val_split.empty(), ErrorCode::kInvalidArgument,
          "sweep: validation split is empty");

  const fs::path out(spec.out_dir);
  const auto cells = spec.cells();
  std::vector<bool> todo(cells.size(), false);
  std::vector<std::string> damaged;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto cfg = cells[i].config(spec.base);
    switch (inspect(out / cells[i].dir_name(), cfg)) {
      case CellState::kAbsent: todo[i] = true; break;
      case CellState::kComplete: break;
      case CellState::kDamaged:
        damaged.push_back(cells[i].dir_name());
        todo[i] = true;
        break;
    }
  }
  if (!damaged.empty() && !spec.overwrite) {
    std::string list;
    for (const auto& d : damaged) list += " " + d;
    fail(ErrorCode::kState,
         "sweep: output directory has incomplete or foreign cells:" + list +
             " (pass the overwrite flag to retrain them)");
  }
  fs::create_directories(out);
  for (const auto& d : damaged) fs::remove_all(out / d);
  if (spec.overwrite) {
    for (const auto& c : cells) fs::remove_all(out / (".partial_" + c.dir_name()));
  }

  std::mutex log_mutex;
  auto log = [&](const std::string& m) {
    if (!progress) return;
    std::lock_guard lock(log_mutex);
    progress(m);
  };
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= cells.size()) return;
      if (!todo[i]) {
        log("skip " + cells[i].dir_name() + " (complete)");
        continue;
      }
      try {
        const auto cfg = cells[i].config(spec.base);
        const fs::path partial = out / (".partial_" + cells[i].dir_name());
        log("train " + cells[i].dir_name());
        trainer::PretrainOptions opt;
        opt.out_dir = partial.string();
        opt.resume = true;
        trainer::pretrain(train_split, &val_split, cfg, opt);
        fs::rename(partial, out / cells[i].dir_name());
        log("done " + cells[i].dir_name());
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = cells.size();
      }
    }
  };
  const std::size_t nthreads = std::min(spec.threads, cells.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<SummaryRow> rows;
  for (const auto& cell : cells) {
    rows.push_back(summarize(cell, cell.config(spec.base),
                             out / cell.dir_name(), val_split));
  }
  const auto text = format_summary_csv(rows);
  write_file((out / "summary.csv").string(),
             std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                       text.size()));
  return rows;
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "n,s,l,objective,val_Lf,val_Lr\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + (r.s ? std::to_string(*r.s) : "-") +
           "," + (r.l ? std::to_string(*r.l) : "-") + "," +
           (r.objective == Objective::kLm ? "lm" : "lf") + "," +
           shortest(r.val_lf) + "," + shortest(r.val_lr) + "\n";
  }
  return out;
}

std::vector<SummaryRow> parse_summary_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) &&
              line == "n,s,l,objective,val_Lf,val_Lr",
          ErrorCode::kCorrupt, "summary: unexpected header");
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    require(f.size() == 6, ErrorCode::kCorrupt,
            "summary line " + std::to_string(line_no) + ": expected 6 fields");
    try {
      SummaryRow r;
      r.n = std::stoul(f[0]);
      if (f[1] != "-") r.s = std::stoul(f[1]);
      if (f[2] != "-") r.l = std::stoul(f[2]);
      require(f[3] == "lf" || f[3] == "lm", ErrorCode::kCorrupt,
              "bad objective");
      r.objective = f[3] == "lm" ? Objective::kLm : Objective::kLf;
      r.val_lf = std::stod(f[4]);
      r.val_lr = std::stod(f[5]);
      require(r.s.has_value() == r.l.has_value(), ErrorCode::kCorrupt,
              "s and l must both be set or both be '-'");
      rows.push_back(r);
    } catch (const std::logic_error&) {
      fail(ErrorCode::kCorrupt,
           "summary line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

Fig2Data fig2_data(const std::vector<SummaryRow>& rows) {
  Fig2Data d;
  bool any_baseline = false;
  for (const auto& r : rows) {
    if (std::find(d.groups.begin(), d.groups.end(), r.n) == d.groups.end())
      d.groups.push_back(r.n);
    if (r.baseline()) {
      any_baseline = true;
    } else {
      std::optional<std::pair<std::size_t, std::size_t>> w =
          std::make_pair(*r.s, *r.l);
      if (std::find(d.series.begin(), d.series.end(), w) == d.series.end())
        d.series.push_back(w);
    }
  }
  std::sort(d.groups.begin(), d.groups.end());
  std::sort(d.series.begin(), d.series.end());
  if (any_baseline) d.series.insert(d.series.begin(), std::nullopt);
  for (auto n : d.groups) {
    for (const auto& w : d.series) {
      Fig2Bar bar{n, w, std::nullopt, std::nullopt};
      for (const auto& r : rows) {
        const bool match =
            r.n == n && (w ? (r.s == w->first && r.l == w->second)
                           : r.baseline());
        if (match) {
          bar.val_lf = r.val_lf;
          bar.val_lr = w ? r.val_lr : 0.0;
        }
      }
      if (!bar.val_lf) {
        d.missing.push_back(
            "n=" + std::to_string(n) + " " +
            (w ? "(" + std::to_string(w->first) + "," +
                     std::to_string(w->second) + ")"
               : std::string("(-,-)")));
      }
      d.bars.push_back(bar);
    }
  }
  return d;
}

namespace {

std::string series_label(
    const std::optional<std::pair<std::size_t, std::size_t>>& w) {
  return w ? "(" + std::to_string(w->first) + "," + std::to_string(w->second) +
                 ")"
           : "(-,-)";
}

}  // namespace

std::string format_fig2_csv(const Fig2Data& d) {
  std::string out = "n,s,l,val_Lf,val_Lr\n";
  for (const auto& b : d.bars) {
    auto num = [](const std::optional<double>& v) {
      return v ? shortest(*v) : std::string();
    };
    out += std::to_string(b.n) + "," +
           (b.window ? std::to_string(b.window->first) : "-") + "," +
           (b.window ? std::to_string(b.window->second) : "-") + "," +
           num(b.val_lf) + "," + num(b.val_lr) + "\n";
  }
  return out;
}

std::string render_fig2_svg(const Fig2Data& d) {
  static const char* kPalette[] = {"#4d4d4d", "#1f77b4", "#ff7f0e", "#2ca02c",
                                   "#d62728", "#9467bd", "#8c564b", "#e377c2",
                                   "#17becf", "#bcbd22"};
  const double panel_w = 440, panel_h = 300, left = 60, top = 40,
               plot_w = 360, plot_h = 220;
  const double width = 2 * panel_w, height = panel_h + 40;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" "
      << "font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[256];
  for (int panel = 0; panel < 2; ++panel) {
    const bool lr = panel == 0;
    const double x0 = panel * panel_w + left, y0 = top;
    double vmax = 0;
    for (const auto& b : d.bars) {
      const auto& v = lr ? b.val_lr : b.val_lf;
      if (v) vmax = std::max(vmax, *v);
    }
    if (vmax <= 0) vmax = 1;
    vmax *= 1.1;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"20\" text-anchor=\"middle\" "
                  "font-size=\"13\">Validation %s</text>\n",
                  x0 + plot_w / 2, lr ? "L_r" : "L_f");
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/>\n",
                  x0, y0, x0, y0 + plot_h);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"black\"/>\n",
                  x0, y0 + plot_h, x0 + plot_w, y0 + plot_h);
    svg << buf;
    for (int t = 0; t <= 4; ++t) {
      const double v = vmax * t / 4, y = y0 + plot_h - plot_h * t / 4;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g"
                    "</text>\n",
                    x0 - 4, y + 4, v);
      svg << buf;
    }
    const std::size_t groups = std::max<std::size_t>(1, d.groups.size());
    const std::size_t series = std::max<std::size_t>(1, d.series.size());
    const double group_w = plot_w / static_cast<double>(groups);
    const double bar_w = group_w * 0.8 / static_cast<double>(series);
    for (std::size_t g = 0; g < d.groups.size(); ++g) {
      const double gx = x0 + g * group_w;
      std::snprintf(buf, sizeof buf,
                    "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">"
                    "n=%zu</text>\n",
                    gx + group_w / 2, y0 + plot_h + 16, d.groups[g]);
      svg << buf;
      for (std::size_t s = 0; s < d.series.size(); ++s) {
        const auto& bar = d.bars[g * d.series.size() + s];
        const auto& v = lr ? bar.val_lr : bar.val_lf;
        if (!v) continue;  // gap for a missing cell
        const double h = plot_h * (*v / vmax);
        std::snprintf(buf, sizeof buf,
                      "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" "
                      "height=\"%.1f\" fill=\"%s\"/>\n",
                      gx + group_w * 0.1 + s * bar_w, y0 + plot_h - h,
                      bar_w, h, kPalette[s % 10]);
        svg << buf;
      }
    }
  }
  // Legend under the panels.
  for (std::size_t s = 0; s < d.series.size(); ++s) {
    const double x = left + s * 80.0, y = panel_h + 20;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"10\" height=\"10\" "
                  "fill=\"%s\"/><text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                  x, y - 9, kPalette[s % 10], x + 14, y,
                  series_label(d.series[s]).c_str());
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace apcr::sweep
