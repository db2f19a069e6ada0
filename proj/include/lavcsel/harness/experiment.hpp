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

// Runs one experiment at one operating point and packages the result as a
// table row plus a JSON report.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lavcsel/encoder.hpp"
#include "lavcsel/harness/config.hpp"
#include "lavcsel/metrics.hpp"
#include "lavcsel/optics.hpp"
#include "lavcsel/random.hpp"
#include "lavcsel/training.hpp"

namespace lavcsel::harness {

using json = nlohmann::json;

/// Seeds of one evaluation. `base` fixes the device and the input sequences
/// and is shared by every sweep point of a repetition, so points differ only
/// in the swept parameter; `point` drives noise and training.
struct PointSeeds {
  std::uint64_t base = 0;
  std::uint64_t point = 0;
};

inline std::uint64_t base_seed(std::uint64_t master_seed, int repetition) {
  return derive_seed(derive_seed(master_seed, "base"), {static_cast<std::uint64_t>(repetition)});
}

inline std::uint64_t point_seed(std::uint64_t master_seed, std::size_t point, int repetition) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(point), static_cast<std::uint64_t>(repetition)});
}

inline PointSeeds seeds_for(std::uint64_t master_seed, std::size_t point, int repetition) {
  return {base_seed(master_seed, repetition), point_seed(master_seed, point, repetition)};
}

struct Metrics {
  std::optional<double> nmse;
  std::optional<double> ser;
  std::optional<double> ser_train;
  std::optional<double> c_total;
  std::optional<double> c_node_mean;
  std::optional<int> k_min;
  std::optional<int> k_min_off;
  std::optional<double> probe_d;
};

struct PointOutcome {
  Metrics metrics;
  json report;
  std::optional<TrainingRun> training;  // train experiment only
};

inline SimulatorConfig simulator_config(const ExperimentConfig& cfg, std::uint64_t base) {
  SimulatorConfig s;
  s.grid = cfg.encoder.grid;
  s.n_bits = cfg.encoder.n_bits;
  s.ring_fraction = cfg.encoder.ring_fraction;
  s.params = cfg.reservoir;
  s.device_seed = derive_seed(base, "device");
  return s;
}

/// Keeps the last device around so consecutive points that only change an
/// operating parameter skip the device build. Not shared between threads.
class SimulatorCache {
 public:
  Simulator get(const SimulatorConfig& cfg) {
    if (last_ && same_device(last_->config(), cfg)) return last_->with_params(cfg.params);
    last_.emplace(cfg);
    return *last_;
  }

 private:
  static bool same_device(const SimulatorConfig& a, const SimulatorConfig& b) {
    return a.device_seed == b.device_seed && a.grid == b.grid && a.n_bits == b.n_bits &&
           a.ring_fraction == b.ring_fraction && a.params.sites == b.params.sites &&
           a.params.nodes == b.params.nodes && a.params.mix_weight == b.params.mix_weight &&
           a.params.diffusion_length_sites == b.params.diffusion_length_sites;
  }

  std::optional<Simulator> last_;
};

inline json provenance(const ExperimentConfig& cfg, const PointSeeds& seeds, const Simulator& sim) {
  return {
      {"master_seed", cfg.run.master_seed},
      {"base_seed", seeds.base},
      {"seed", seeds.point},
      {"device_seed", sim.config().device_seed},
      {"params_hash", cfg.reservoir.hash()},
      {"recipe", cfg.run.recipe},
      {"config", serialize_config(cfg)},
  };
}

inline json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline LabeledSequence metric_sequence(const ExperimentConfig& cfg, const PointSeeds& seeds) {
  return make_sequence(cfg.encoder.grid, cfg.encoder.n_bits, cfg.metrics.sequence_length, cfg.encoder.ring_fraction,
                       derive_seed(seeds.base, "metric_sequence"));
}

inline PointOutcome run_train(const ExperimentConfig& cfg, const PointSeeds& seeds, const Simulator& sim) {
  const auto& enc = cfg.encoder;
  const LabeledSequence train = make_sequence(enc.grid, enc.n_bits, cfg.training.train_length, enc.ring_fraction,
                                              derive_seed(seeds.base, "train_sequence"));
  const LabeledSequence test = make_sequence(enc.grid, enc.n_bits, cfg.training.test_length, enc.ring_fraction,
                                             derive_seed(seeds.base, "test_sequence"));
  PointOutcome out;
  TrainingRun run = train_all_classes(sim, train, cfg.training.options(), derive_seed(seeds.point, "training"));
  const Evaluation on_train = evaluate_response(run.records, run.train_response.values, train.labels);
  NoiseStream test_noise(derive_seed(seeds.point, "test_noise"));
  const Evaluation on_test = evaluate(run.records, sim, test, test_noise);

  double mean_final = 0.0;
  json classes = json::array();
  for (const auto& rec : run.records) {
    mean_final += rec.final_error();
    classes.push_back({{"class", rec.cls},
                       {"final_nmse", rec.final_error()},
                       {"accepted_epochs", rec.accepted_epochs},
                       {"seed", rec.seed}});
  }
  mean_final /= static_cast<double>(run.records.size());

  out.metrics.nmse = mean_final;
  out.metrics.ser = on_test.ser;
  out.metrics.ser_train = on_train.ser;
  out.report = {{"experiment", "train"},
                {"nmse", mean_final},
                {"ser_train", on_train.ser},
                {"ser_test", on_test.ser},
                {"test_class_nmse", on_test.class_nmse},
                {"classes", classes},
                {"provenance", provenance(cfg, seeds, sim)}};
  out.training = std::move(run);
  return out;
}

inline PointOutcome run_consistency(const ExperimentConfig& cfg, const PointSeeds& seeds, const Simulator& sim) {
  const LabeledSequence seq = metric_sequence(cfg, seeds);
  const ConsistencyReport rep =
      consistency(sim, seq, cfg.metrics.consistency_repetitions, derive_seed(seeds.point, "consistency"));
  PointOutcome out;
  out.metrics.c_total = rep.c_total;
  out.metrics.c_node_mean = rep.mean_c_node();
  out.report = {{"experiment", "consistency"},
                {"repetitions", rep.repetitions},
                {"c_total", rep.c_total},
                {"c_node", to_json(rep.c_node)},
                {"c_node_mean", rep.mean_c_node()},
                {"flagged_nodes", rep.flagged_nodes},
                {"total_flagged", rep.total_flagged},
                {"provenance", provenance(cfg, seeds, sim)}};
  return out;
}

inline PointOutcome run_dimensionality(const ExperimentConfig& cfg, const PointSeeds& seeds, const Simulator& sim) {
  const LabeledSequence seq = metric_sequence(cfg, seeds);
  NoiseStream on_noise(derive_seed(seeds.point, "dimensionality_on"));
  NoiseStream off_noise(derive_seed(seeds.point, "dimensionality_off"));
  const bool center = cfg.metrics.center_covariance;
  const DimensionalityReport on = analyze_dimensionality(sim.respond(seq, on_noise).values, center);
  const DimensionalityReport off =
      analyze_dimensionality(sim.with_response(ResponseModel::passive).respond(seq, off_noise).values, center);
  PointOutcome out;
  out.metrics.k_min = on.k_min;
  out.metrics.k_min_off = off.k_min;
  out.report = {{"experiment", "dimensionality"},
                {"k_min", on.k_min},
                {"k_min_off", off.k_min},
                {"eigenvalues", to_json(on.spectrum.values)},
                {"indicator_values", to_json(on.indicator)},
                {"eigenvalues_off", to_json(off.spectrum.values)},
                {"indicator_values_off", to_json(off.indicator)},
                {"residual_spread", on.residual_spread},
                {"heteroscedastic", on.heteroscedastic},
                {"provenance", provenance(cfg, seeds, sim)}};
  return out;
}

inline PointOutcome run_probe(const ExperimentConfig& cfg, const PointSeeds& seeds, const Simulator& sim) {
  const NonlinearityProbe probe = nonlinearity_probe(sim);
  PointOutcome out;
  out.metrics.probe_d = probe.score;
  out.report = {{"experiment", "probe"},
                {"D", probe.score},
                {"deviation", to_json(probe.deviation)},
                {"provenance", provenance(cfg, seeds, sim)}};
  return out;
}

inline PointOutcome run_point(const ExperimentConfig& cfg, Experiment experiment, const PointSeeds& seeds,
                              SimulatorCache* cache = nullptr) {
  validate(cfg);
  const SimulatorConfig sc = simulator_config(cfg, seeds.base);
  const Simulator sim = cache ? cache->get(sc) : Simulator(sc);
  switch (experiment) {
    case Experiment::train: return run_train(cfg, seeds, sim);
    case Experiment::consistency: return run_consistency(cfg, seeds, sim);
    case Experiment::dimensionality: return run_dimensionality(cfg, seeds, sim);
    case Experiment::probe: return run_probe(cfg, seeds, sim);
  }
  return {};
}

}  // namespace lavcsel::harness
