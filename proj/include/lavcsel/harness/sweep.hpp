// Copyright 2026 The lavcsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Parameter sweeps: expansion of the configured axes into points, a worker
// pool that evaluates (point, repetition) jobs, an ordered CSV sink, named
// recipes and plot-ready exports.

#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lavcsel/error.hpp"
#include "lavcsel/harness/config.hpp"
#include "lavcsel/harness/experiment.hpp"

namespace lavcsel::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Sweep expansion

struct SweepPoint {
  std::size_t index = 0;
  std::vector<double> axis_values;  // one per axis, the value actually used
  ExperimentConfig config;
};

inline double field_value(const ExperimentConfig& cfg, const std::string& name) {
  const ConfigField* f = find_field(name);
  if (!f || !f->set_number) throw ConfigError("'" + name + "' is not a numeric config field");
  return std::stod(f->get(cfg));
}

inline std::vector<std::string> axis_names(const ExperimentConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& a : cfg.sweep.axes) names.push_back(a.name);
  return names;
}

/// Grid mode: cartesian product, first axis outermost. One-way mode: each
/// axis in turn with the other axes left at their configured values. No axes
/// gives a single point.
inline std::vector<SweepPoint> expand_sweep(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto& axes = cfg.sweep.axes;
  std::vector<SweepPoint> points;
  auto finish = [&](ExperimentConfig c) {
    SweepPoint p;
    p.index = points.size();
    for (const auto& a : axes) p.axis_values.push_back(field_value(c, a.name));
    p.config = std::move(c);
    points.push_back(std::move(p));
  };

  if (axes.empty()) {
    finish(cfg);
  } else if (cfg.sweep.mode == SweepMode::oneway) {
    for (const auto& a : axes) {
      for (double v : a.values) {
        ExperimentConfig c = cfg;
        find_field(a.name)->set_number(c, v);
        finish(std::move(c));
      }
    }
  } else {
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
      ExperimentConfig c = cfg;
      for (std::size_t i = 0; i < axes.size(); ++i) find_field(axes[i].name)->set_number(c, axes[i].values[idx[i]]);
      finish(std::move(c));
      std::size_t i = axes.size();
      while (i > 0) {
        --i;
        if (++idx[i] < axes[i].values.size()) break;
        idx[i] = 0;
        if (i == 0) return points;
      }
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Result table

struct ResultRow {
  std::size_t point = 0;
  int repetition = 0;
  std::vector<double> axis_values;
  Metrics metrics;
  std::uint64_t base_seed = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double wall_time_s = 0.0;
};

struct ResultTable {
  std::vector<std::string> axes;
  std::vector<ResultRow> rows;
  bool has_timing = false;
};

inline const std::vector<std::string>& metric_columns() {
  static const std::vector<std::string> cols = {"nmse",        "ser",   "ser_train", "c_total",
                                                "c_node_mean", "k_min", "k_min_off", "probe_d"};
  return cols;
}

inline std::string metric_unit(const std::string& name) {
  if (name == "ser" || name == "ser_train") return "fraction of symbols";
  if (name == "k_min" || name == "k_min_off") return "components";
  return "dimensionless";
}

inline std::optional<double> metric_value(const Metrics& m, const std::string& name) {
  auto as_double = [](const std::optional<int>& v) -> std::optional<double> {
    return v ? std::optional<double>(*v) : std::nullopt;
  };
  if (name == "nmse") return m.nmse;
  if (name == "ser") return m.ser;
  if (name == "ser_train") return m.ser_train;
  if (name == "c_total") return m.c_total;
  if (name == "c_node_mean") return m.c_node_mean;
  if (name == "k_min") return as_double(m.k_min);
  if (name == "k_min_off") return as_double(m.k_min_off);
  if (name == "probe_d") return m.probe_d;
  throw ConfigError("unknown metric '" + name + "'");
}

inline void set_metric(Metrics& m, const std::string& name, double v) {
  if (name == "nmse") m.nmse = v;
  else if (name == "ser") m.ser = v;
  else if (name == "ser_train") m.ser_train = v;
  else if (name == "c_total") m.c_total = v;
  else if (name == "c_node_mean") m.c_node_mean = v;
  else if (name == "k_min") m.k_min = static_cast<int>(v);
  else if (name == "k_min_off") m.k_min_off = static_cast<int>(v);
  else if (name == "probe_d") m.probe_d = v;
  else throw ConfigError("unknown metric '" + name + "'");
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += (ch == '\n' || ch == '\r') ? ' ' : ch;
  }
  return out + '"';
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

}  // namespace detail

inline std::string csv_header(const std::vector<std::string>& axes, bool timing) {
  std::string h = "point,repetition";
  for (const auto& a : axes) h += "," + a;
  for (const auto& m : metric_columns()) h += "," + m;
  h += ",base_seed,seed,status";
  if (timing) h += ",wall_time_s";
  return h + "\n";
}

inline std::string csv_row(const ResultRow& r, bool timing) {
  std::string s = std::to_string(r.point) + "," + std::to_string(r.repetition);
  for (double v : r.axis_values) s += "," + format_double(v);
  for (const auto& m : metric_columns()) {
    const auto v = metric_value(r.metrics, m);
    s += ",";
    if (v) s += format_double(*v);
  }
  s += "," + std::to_string(r.base_seed) + "," + std::to_string(r.seed) + "," + detail::csv_field(r.status);
  if (timing) s += "," + format_double(r.wall_time_s);
  return s + "\n";
}

inline std::string to_csv(const ResultTable& t) {
  std::string s = csv_header(t.axes, t.has_timing);
  for (const auto& r : t.rows) s += csv_row(r, t.has_timing);
  return s;
}

inline ResultTable parse_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("results file is empty");
  const auto header = detail::split_csv_line(line);
  if (header.size() < 2 || header[0] != "point" || header[1] != "repetition") {
    throw ConfigError("results file does not start with point,repetition");
  }
  ResultTable t;
  std::size_t col = 2;
  while (col < header.size() && header[col] != metric_columns().front()) t.axes.push_back(header[col++]);
  const std::size_t metrics_at = col;
  const std::size_t seeds_at = metrics_at + metric_columns().size();
  if (header.size() < seeds_at + 3 || header[seeds_at] != "base_seed") {
    throw ConfigError("results header has an unexpected layout");
  }
  t.has_timing = header.size() > seeds_at + 3 && header[seeds_at + 3] == "wall_time_s";

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) throw ConfigError("wrong number of cells", line_no);
    try {
      ResultRow r;
      r.point = std::stoull(cells[0]);
      r.repetition = std::stoi(cells[1]);
      for (std::size_t i = 2; i < metrics_at; ++i) r.axis_values.push_back(std::stod(cells[i]));
      for (std::size_t i = 0; i < metric_columns().size(); ++i) {
        if (!cells[metrics_at + i].empty()) set_metric(r.metrics, metric_columns()[i], std::stod(cells[metrics_at + i]));
      }
      r.base_seed = std::stoull(cells[seeds_at]);
      r.seed = std::stoull(cells[seeds_at + 1]);
      r.status = cells[seeds_at + 2];
      if (t.has_timing) r.wall_time_s = std::stod(cells[seeds_at + 3]);
      t.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("malformed number in results file", line_no);
    }
  }
  return t;
}

inline ResultTable load_results(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open results file '" + path.string() + "'");
  return parse_results_csv(in);
}

// ---------------------------------------------------------------------------
// Recipes

struct Recipe {
  std::string name;
  std::string figure;
  Experiment experiment = Experiment::train;
  SweepMode mode = SweepMode::grid;
  std::vector<SweepAxis> axes;
  std::vector<std::pair<std::string, double>> fixed;  // applied before the sweep
  std::vector<std::string> plot_metrics;
  std::string description;
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    // Rounded to 1e-9 so grid values print as the decimals they stand for.
    const double x = lo + (hi - lo) * i / (n - 1);
    v.push_back(std::round(x * 1e9) / 1e9);
  }
  return v;
}

inline const std::vector<Recipe>& recipes() {
  static const std::vector<Recipe> all = {
      {"fig2b", "Fig2b", Experiment::train, SweepMode::grid,
       {{"power_ratio", {0.35, 1.2, 3.6}}, {"delta_lambda_nm", linspace(-0.5, 0.5, 11)}},
       {},
       {"nmse", "ser"},
       "NMSE over injection detuning for several injection power ratios"},
      {"fig2c", "Fig2c", Experiment::train, SweepMode::grid,
       {{"power_ratio", {0.05, 0.1, 0.2, 0.35, 0.6, 1.0, 1.2, 2.0, 3.6, 5.0}}},
       {},
       {"nmse", "ser"},
       "NMSE over injection power ratio at resonance"},
      {"fig3a", "Fig3a", Experiment::train, SweepMode::grid,
       {{"bias_ratio", {1.1, 1.3, 1.5}}, {"ring_fraction", linspace(0.1, 0.9, 9)}},
       {},
       {"nmse", "ser"},
       "NMSE over the locking-ring area fraction for several bias currents"},
      {"fig4", "Fig4", Experiment::consistency, SweepMode::oneway,
       {{"power_ratio", {0.1, 0.35, 1.2, 3.6}},
        {"bias_ratio", {1.1, 1.2, 1.3, 1.5}},
        {"delta_lambda_nm", {-0.3, -0.15, 0.0, 0.15, 0.3}}},
       {},
       {"c_total", "c_node_mean"},
       "consistency over power ratio, bias and detuning, one axis at a time"},
      {"fig5", "Fig5", Experiment::dimensionality, SweepMode::grid,
       {{"bias_ratio", {1.1, 1.3, 1.5}}, {"n_bits", {3, 4, 5, 6, 7, 8, 9, 10}}},
       {{"power_ratio", 0.8}},
       {"k_min", "k_min_off"},
       "dimensionality over header bits and bias, laser on and off"},
  };
  return all;
}

inline const Recipe* find_recipe(std::string_view name) {
  for (const auto& r : recipes()) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

/// Overlays a recipe on `base`: the recipe sets the experiment, its fixed
/// values and the sweep; every other setting keeps the base value.
inline ExperimentConfig apply_recipe(const Recipe& recipe, ExperimentConfig base) {
  base.run.recipe = recipe.name;
  base.run.experiment = recipe.experiment;
  for (const auto& [key, value] : recipe.fixed) find_field(key)->set_number(base, value);
  base.sweep.mode = recipe.mode;
  base.sweep.axes = recipe.axes;
  validate(base);
  return base;
}

inline std::string figure_for(const std::string& recipe) {
  const Recipe* r = find_recipe(recipe);
  return r ? r->figure : std::string();
}

// ---------------------------------------------------------------------------
// Running

struct SweepOptions {
  std::optional<fs::path> out_dir;  // results.csv, config.ini, sweep.json
  int workers = 1;
  int repetitions = 1;
  bool record_timing = false;
};

inline SweepOptions sweep_options(const ExperimentConfig& cfg) {
  SweepOptions o;
  o.workers = cfg.run.workers;
  o.repetitions = cfg.run.repetitions;
  o.record_timing = cfg.run.record_timing;
  return o;
}

namespace detail {

/// Writes rows in job order as soon as every earlier job has finished.
class OrderedSink {
 public:
  OrderedSink(std::ostream* out, bool timing, std::size_t jobs)
      : out_(out), timing_(timing), rows_(jobs) {}

  void put(std::size_t job, ResultRow row) {
    std::lock_guard lock(mu_);
    rows_[job] = std::move(row);
    while (next_ < rows_.size() && rows_[next_]) {
      if (out_) {
        *out_ << csv_row(*rows_[next_], timing_);
        out_->flush();
      }
      ++next_;
    }
  }

  std::vector<ResultRow> take() {
    std::vector<ResultRow> out;
    for (auto& r : rows_) out.push_back(std::move(*r));
    return out;
  }

 private:
  std::mutex mu_;
  std::ostream* out_;
  bool timing_;
  std::vector<std::optional<ResultRow>> rows_;
  std::size_t next_ = 0;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace detail

inline ResultRow run_job(const SweepPoint& p, Experiment experiment, int repetition, std::uint64_t master_seed,
                         bool timing, SimulatorCache& cache) {
  ResultRow row;
  row.point = p.index;
  row.repetition = repetition;
  row.axis_values = p.axis_values;
  const PointSeeds seeds = seeds_for(master_seed, p.index, repetition);
  row.base_seed = seeds.base;
  row.seed = seeds.point;
  const auto start = std::chrono::steady_clock::now();
  try {
    row.metrics = run_point(p.config, experiment, seeds, &cache).metrics;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
  }
  if (timing) row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Evaluates every (point, repetition) job. Jobs run repetition-major so that
/// consecutive jobs reuse one device; rows come out in that order whatever
/// the worker count. Per-point failures land in the status column.
inline ResultTable run_sweep(const ExperimentConfig& cfg, Experiment experiment, const SweepOptions& opts) {
  lavcsel::detail::require_domain(opts.workers >= 1, "workers must be >= 1");
  lavcsel::detail::require_domain(opts.repetitions >= 1, "repetitions must be >= 1");
  const std::vector<SweepPoint> points = expand_sweep(cfg);
  const std::size_t jobs = points.size() * static_cast<std::size_t>(opts.repetitions);

  ResultTable table;
  table.axes = axis_names(cfg);
  table.has_timing = opts.record_timing;

  std::ofstream csv;
  if (opts.out_dir) {
    fs::create_directories(*opts.out_dir);
    ExperimentConfig resolved = cfg;
    resolved.run.experiment = experiment;
    resolved.run.repetitions = opts.repetitions;
    detail::write_text(*opts.out_dir / "config.ini", serialize_config(resolved));
    csv.open(*opts.out_dir / "results.csv", std::ios::binary | std::ios::trunc);
    if (!csv) throw ConfigError("cannot write results.csv in '" + opts.out_dir->string() + "'");
    csv << csv_header(table.axes, table.has_timing);
    csv.flush();
  }

  detail::OrderedSink sink(opts.out_dir ? &csv : nullptr, opts.record_timing, jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    SimulatorCache cache;
    for (std::size_t j = next++; j < jobs; j = next++) {
      const int rep = static_cast<int>(j / points.size());
      const SweepPoint& p = points[j % points.size()];
      sink.put(j, run_job(p, experiment, rep, cfg.run.master_seed, opts.record_timing, cache));
    }
  };
  const int n_threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(opts.workers), jobs));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  table.rows = sink.take();

  if (opts.out_dir) {
    std::size_t failed = 0;
    for (const auto& r : table.rows) failed += r.status != "ok";
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : cfg.sweep.axes) {
      const ConfigField* f = find_field(a.name);
      axes.push_back({{"name", a.name}, {"unit", f ? f->unit : ""}, {"values", a.values}});
    }
    const nlohmann::json meta = {{"recipe", cfg.run.recipe},
                                 {"figure", figure_for(cfg.run.recipe)},
                                 {"experiment", to_string(experiment)},
                                 {"mode", cfg.sweep.mode == SweepMode::grid ? "grid" : "oneway"},
                                 {"axes", axes},
                                 {"points", points.size()},
                                 {"repetitions", opts.repetitions},
                                 {"master_seed", cfg.run.master_seed},
                                 {"rows", table.rows.size()},
                                 {"failed_rows", failed}};
    detail::write_text(*opts.out_dir / "sweep.json", meta.dump(2) + "\n");
  }
  return table;
}

inline ResultTable run_sweep(const ExperimentConfig& cfg, Experiment experiment) {
  return run_sweep(cfg, experiment, sweep_options(cfg));
}

// ---------------------------------------------------------------------------
// Plot data

struct PlotFiles {
  fs::path csv;
  fs::path manifest;
};

/// Writes `plotdata.csv` (selected axes, metrics and seed, one line per ok
/// row) and `manifest.json`. All checks run before anything is written.
inline PlotFiles emit_plotdata(const ResultTable& table, const std::vector<std::string>& axes,
                               const std::vector<std::string>& metrics, const fs::path& out_dir,
                               const std::string& recipe = "custom") {
  if (table.rows.empty()) throw DomainError("result table is empty");
  if (axes.empty()) throw DomainError("no axes selected");
  if (metrics.empty()) throw DomainError("no metrics selected");
  std::vector<std::size_t> axis_idx;
  for (const auto& a : axes) {
    const auto it = std::find(table.axes.begin(), table.axes.end(), a);
    if (it == table.axes.end()) throw DomainError("unknown axis '" + a + "'");
    axis_idx.push_back(static_cast<std::size_t>(it - table.axes.begin()));
  }
  for (const auto& m : metrics) {
    if (std::find(metric_columns().begin(), metric_columns().end(), m) == metric_columns().end()) {
      throw DomainError("unknown metric '" + m + "'");
    }
  }

  std::string csv;
  for (const auto& a : axes) csv += a + ",";
  for (const auto& m : metrics) csv += m + ",";
  csv += "seed\n";
  std::size_t written = 0;
  for (const auto& r : table.rows) {
    if (r.status != "ok") continue;
    for (std::size_t i : axis_idx) csv += format_double(r.axis_values[i]) + ",";
    for (const auto& m : metrics) {
      const auto v = metric_value(r.metrics, m);
      if (v) csv += format_double(*v);
      csv += ",";
    }
    csv += std::to_string(r.seed) + "\n";
    ++written;
  }
  if (written == 0) throw DomainError("no successful rows to plot");

  nlohmann::json jaxes = nlohmann::json::array();
  for (const auto& a : axes) {
    const ConfigField* f = find_field(a);
    jaxes.push_back({{"name", a}, {"unit", f ? f->unit : ""}});
  }
  nlohmann::json jmetrics = nlohmann::json::array();
  for (const auto& m : metrics) jmetrics.push_back({{"name", m}, {"unit", metric_unit(m)}});
  const std::string figure = figure_for(recipe);
  const nlohmann::json manifest = {{"recipe", recipe},
                                   {"figure", figure.empty() ? nlohmann::json(nullptr) : nlohmann::json(figure)},
                                   {"data", "plotdata.csv"},
                                   {"axes", jaxes},
                                   {"metrics", jmetrics},
                                   {"rows", written},
                                   {"constants",
                                    {{"threshold_current_mA", units::kThresholdCurrent_mA},
                                     {"resonance_wavelength_nm", units::kResonanceWavelength_nm}}}};

  fs::create_directories(out_dir);
  PlotFiles files{out_dir / "plotdata.csv", out_dir / "manifest.json"};
  detail::write_text(files.csv, csv);
  detail::write_text(files.manifest, manifest.dump(2) + "\n");
  return files;
}

}  // namespace lavcsel::harness
