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

// Command-line front end: single-point experiments, sweeps and plot export.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lavcsel/error.hpp"
#include "lavcsel/harness/config.hpp"
#include "lavcsel/harness/experiment.hpp"
#include "lavcsel/harness/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lavcsel;
using namespace lavcsel::harness;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kDomain = 4, kNumeric = 5, kIo = 6, kOther = 7 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<int> repetitions;
};

void add_common(CLI::App* cmd, Common& c, bool sweep_flags) {
  cmd->add_option("--config", c.config, "config file (key = value with [sections])");
  cmd->add_option("--seed", c.seed, "master seed, overrides [run] master_seed");
  cmd->add_option("--out", c.out, "output directory, overrides [run] output_dir");
  if (sweep_flags) {
    cmd->add_option("--workers", c.workers, "worker threads")->check(CLI::Range(1, 256));
    cmd->add_option("--repetitions", c.repetitions, "repetitions per sweep point")->check(CLI::Range(1, 1000000));
  }
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : parse_config(c.config);
  if (c.seed) cfg.run.master_seed = *c.seed;
  if (c.out) cfg.run.output_dir = *c.out;
  if (c.workers) cfg.run.workers = *c.workers;
  if (c.repetitions) cfg.run.repetitions = *c.repetitions;
  validate(cfg);
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::ios_base::failure("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Single-point experiment: writes config.ini and <name>.json, echoes the
// report on stdout.
int run_single(const Common& common, Experiment experiment) {
  ExperimentConfig cfg = load(common);
  cfg.run.experiment = experiment;
  const fs::path out = cfg.run.output_dir;
  fs::create_directories(out);
  const PointSeeds seeds = seeds_for(cfg.run.master_seed, 0, 0);
  PointOutcome result = run_point(cfg, experiment, seeds);
  write_file(out / "config.ini", serialize_config(cfg));

  if (result.training) {
    std::string curves = "class,epoch,epsilon,accepted,flips\n";
    for (const auto& rec : result.training->records) {
      for (std::size_t k = 0; k < rec.error_curve.size(); ++k) {
        curves += std::to_string(rec.cls) + "," + std::to_string(k) + "," + format_double(rec.error_curve[k]) + "," +
                  std::to_string(rec.accepted[k]) + "," + std::to_string(rec.flips[k]) + "\n";
      }
    }
    write_file(out / "curves.csv", curves);
  }
  const std::string text = result.report.dump(2) + "\n";
  write_file(out / (to_string(experiment) + ".json"), text);
  std::cout << text;
  return kOk;
}

int run_sweep_cmd(const Common& common, const std::string& which) {
  ExperimentConfig cfg = load(common);
  if (which != "custom") {
    const Recipe* recipe = find_recipe(which);
    if (!recipe) {
      std::string known;
      for (const auto& r : recipes()) known += " " + r.name;
      throw ConfigError("unknown recipe '" + which + "' (known: custom" + known + ")");
    }
    cfg = apply_recipe(*recipe, cfg);
  }
  SweepOptions opts = sweep_options(cfg);
  opts.out_dir = fs::path(cfg.run.output_dir);
  const ResultTable table = run_sweep(cfg, cfg.run.experiment, opts);

  std::size_t failed = 0;
  for (const auto& r : table.rows) failed += r.status != "ok";
  json summary = {{"recipe", cfg.run.recipe},
                  {"experiment", to_string(cfg.run.experiment)},
                  {"rows", table.rows.size()},
                  {"failed_rows", failed},
                  {"results", (*opts.out_dir / "results.csv").string()}};

  const Recipe* recipe = find_recipe(cfg.run.recipe);
  if (!table.axes.empty() && failed < table.rows.size()) {
    std::vector<std::string> metrics;
    if (recipe) {
      metrics = recipe->plot_metrics;
    } else {
      for (const auto& m : metric_columns()) {
        for (const auto& r : table.rows) {
          if (metric_value(r.metrics, m)) {
            metrics.push_back(m);
            break;
          }
        }
      }
    }
    const PlotFiles files = emit_plotdata(table, table.axes, metrics, *opts.out_dir, cfg.run.recipe);
    summary["plotdata"] = files.csv.string();
    summary["manifest"] = files.manifest.string();
  }
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

int run_emit(const std::string& input, const std::string& axes, const std::string& metrics,
             const std::optional<std::string>& recipe_opt, const std::optional<std::string>& out_opt) {
  fs::path results = input;
  if (fs::is_directory(results)) results /= "results.csv";
  const ResultTable table = load_results(results);
  std::string recipe = recipe_opt.value_or("custom");
  if (!recipe_opt) {
    const fs::path meta = results.parent_path() / "sweep.json";
    if (fs::exists(meta)) {
      std::ifstream in(meta);
      const json j = json::parse(in, nullptr, false);
      if (!j.is_discarded() && j.contains("recipe") && j["recipe"].is_string()) recipe = j["recipe"];
    }
  }
  std::vector<std::string> axis_list = split_list(axes);
  std::vector<std::string> metric_list = split_list(metrics);
  if (metric_list.empty()) {
    const Recipe* r = find_recipe(recipe);
    if (r) metric_list = r->plot_metrics;
  }
  const fs::path out = out_opt ? fs::path(*out_opt) : results.parent_path();
  const PlotFiles files = emit_plotdata(table, axis_list, metric_list, out, recipe);
  std::cout << json{{"plotdata", files.csv.string()}, {"manifest", files.manifest.string()}}.dump(2) << "\n";
  return kOk;
}

int fail(int code, const std::string& type, const std::string& message, std::size_t line = 0) {
  json err = {{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}};
  if (line) err["error"]["line"] = line;
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulated injection-locked large-area VCSEL reservoir: training, metrics and sweeps"};
  app.require_subcommand(1);

  Common train_c, cons_c, dim_c, probe_c, sweep_c;
  auto* train = app.add_subcommand("train", "train Boolean readouts for every class and report NMSE / SER");
  add_common(train, train_c, false);
  auto* cons = app.add_subcommand("consistency", "repeated-response correlation, total and per node");
  add_common(cons, cons_c, false);
  auto* dim = app.add_subcommand("dimensionality", "principal-component count, laser on and off");
  add_common(dim, dim_c, false);
  auto* probe = app.add_subcommand("probe", "superposition probe on 3-bit headers");
  add_common(probe, probe_c, false);

  std::string which;
  auto* sweep = app.add_subcommand("sweep", "parameter sweep: a named recipe or the config's [sweep] section");
  sweep->add_option("recipe", which, "fig2b, fig2c, fig3a, fig4, fig5 or custom")->required();
  add_common(sweep, sweep_c, true);

  std::string input, axes, metrics;
  std::optional<std::string> recipe_name, emit_out;
  auto* emit = app.add_subcommand("emit-plotdata", "plot-ready CSV and manifest from a results table");
  emit->add_option("--input", input, "results.csv or the sweep output directory")->required();
  emit->add_option("--axes", axes, "comma-separated axis columns")->required();
  emit->add_option("--metrics", metrics, "comma-separated metric columns (default: the recipe's)");
  emit->add_option("--recipe", recipe_name, "recipe name for the manifest (default: from sweep.json)");
  emit->add_option("--out", emit_out, "output directory (default: next to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (*train) return run_single(train_c, Experiment::train);
    if (*cons) return run_single(cons_c, Experiment::consistency);
    if (*dim) return run_single(dim_c, Experiment::dimensionality);
    if (*probe) return run_single(probe_c, Experiment::probe);
    if (*sweep) return run_sweep_cmd(sweep_c, which);
    if (*emit) return run_emit(input, axes, metrics, recipe_name, emit_out);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.what(), e.line());
  } catch (const DomainError& e) {
    return fail(kDomain, "domain", e.what());
  } catch (const DimensionError& e) {
    return fail(kDomain, "dimension", e.what());
  } catch (const NumericError& e) {
    return fail(kNumeric, "numeric", e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(kIo, "io", e.what());
  } catch (const fs::filesystem_error& e) {
    return fail(kIo, "io", e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
  return kUsage;
}
