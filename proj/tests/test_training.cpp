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

#include <chrono>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "lavcsel/training.hpp"

using namespace lavcsel;

namespace {

Simulator small_sim(std::uint64_t seed, int n_bits = 3) {
  SimulatorConfig c;
  c.grid = Grid{32, 15.0};
  c.n_bits = n_bits;
  c.params.sites = 256;
  c.params.nodes = 60;
  c.device_seed = seed;
  return Simulator(c);
}

TrainRecord untrained(const Eigen::MatrixXd& m, std::mt19937_64& rng, int cls) {
  TrainRecord r;
  r.cls = cls;
  r.best_mask = detail::random_mask(m.cols(), rng);
  r.normalization = normalize_trace(detect(m, r.best_mask)).normalization;
  return r;
}

}  // namespace

TEST(Schedule, Decay) {
  const FlipSchedule s;
  EXPECT_EQ(s.flips(0), 35);
  EXPECT_EQ(s.flips(100), static_cast<int>(std::round(35 * std::pow(0.995, 100))));
  EXPECT_EQ(s.flips(5000), 1);
  for (int k = 1; k < 3000; ++k) EXPECT_LE(s.flips(k), s.flips(k - 1));
  EXPECT_EQ(FlipSchedule::for_nodes(350).initial_flips, 35);
  EXPECT_THROW((FlipSchedule{0, 0.9, 1}.validate()), DomainError);
  EXPECT_THROW((FlipSchedule{3, 1.5, 1}.validate()), DomainError);
}

TEST(Positions, DistinctAndBounded) {
  std::mt19937_64 rng(3);
  for (int count : {1, 5, 35, 50, 80}) {
    const auto pos = detail::pick_positions(50, count, rng);
    EXPECT_EQ(pos.size(), static_cast<std::size_t>(std::min(count, 50)));
    std::set<Eigen::Index> s(pos.begin(), pos.end());
    EXPECT_EQ(s.size(), pos.size());
    for (auto p : pos) {
      EXPECT_GE(p, 0);
      EXPECT_LT(p, 50);
    }
  }
}

TEST(TrainMask, PlantedColumnIsFound) {
  const Eigen::Index T = 200, n = 30;
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.3);
  Eigen::VectorXd target(T);
  for (Eigen::Index t = 0; t < T; ++t) target(t) = coin(rng) ? 1.0 : 0.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(T, n, 3.0);
  m.col(7) = target;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const TrainRecord r = train_mask(m, target, FlipSchedule::for_nodes(n), static_cast<int>(n * 50), seed);
    EXPECT_LT(r.final_error(), 1e-6);
    EXPECT_EQ(r.best_mask.bits[7], 1);
  }
}

TEST(TrainMask, PlantedSubsetAmongNoise) {
  // Target equals the sum of three columns; the rest are independent noise.
  const Eigen::Index T = 300, n = 40;
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd m(T, n);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) m(t, i) = normal(rng);
  }
  Eigen::VectorXd target(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    target(t) = coin(rng) ? 1.0 : 0.0;
    m(t, 3) = m(t, 11) = m(t, 29) = target(t) / 3.0;
  }
  const TrainRecord r = train_mask(m, target, FlipSchedule::for_nodes(n), 4000, 7);
  EXPECT_LT(r.final_error(), 0.05);
}

TEST(TrainMask, Bookkeeping) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(20, 10);
  const Eigen::VectorXd target = (Eigen::VectorXd::Random(20).array() > 0).cast<double>();
  const TrainRecord r = train_mask(m, target, FlipSchedule::for_nodes(10), 1, 4);
  EXPECT_EQ(r.error_curve.size(), 2u);
  EXPECT_EQ(r.accepted.size(), 2u);
  EXPECT_EQ(r.flips.size(), 2u);
  EXPECT_EQ(r.flips[1], 1);
}

TEST(TrainMask, DeterministicAndMonotone) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(100, 40).cwiseAbs();
  const Eigen::VectorXd target = (Eigen::VectorXd::Random(100).array() > 0.5).cast<double>();
  const TrainRecord a = train_mask(m, target, FlipSchedule::for_nodes(40), 500, 11);
  const TrainRecord b = train_mask(m, target, FlipSchedule::for_nodes(40), 500, 11);
  EXPECT_EQ(a.best_mask, b.best_mask);
  EXPECT_EQ(a.error_curve, b.error_curve);
  EXPECT_EQ(a.accepted, b.accepted);

  double last = a.error_curve.front();
  int accepted = 0;
  for (std::size_t k = 1; k < a.error_curve.size(); ++k) {
    if (a.accepted[k]) {
      EXPECT_LT(a.error_curve[k], last);
      last = a.error_curve[k];
      ++accepted;
    } else {
      EXPECT_GE(a.error_curve[k], last - 1e-9);
    }
  }
  EXPECT_EQ(accepted, a.accepted_epochs);
  // The reported error is exactly what the kept mask produces.
  EXPECT_EQ(a.final_error(), nmse(normalize_trace(detect(m, a.best_mask)).values, target));
}

TEST(TrainMask, InputErrors) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(20, 10);
  EXPECT_THROW(train_mask(m, Eigen::VectorXd::Zero(19), FlipSchedule{}, 10, 0), DimensionError);
  EXPECT_THROW(train_mask(m, Eigen::VectorXd::Zero(20), FlipSchedule{}, 0, 0), DomainError);
}

TEST(TrainAll, OneBitGivesTwoRecords) {
  const Simulator sim = small_sim(2, 1);
  const auto seq = make_sequence(sim.config().grid, 1, 100, 0.5, 3);
  TrainingOptions opts;
  opts.epochs = 50;
  const TrainingRun run = train_all_classes(sim, seq, opts, 1);
  ASSERT_EQ(run.records.size(), 2u);
  EXPECT_EQ(run.records[0].cls, 0);
  EXPECT_EQ(run.records[1].cls, 1);
}

TEST(TrainAll, DefaultThreeBitTaskIsLearned) {
  SimulatorConfig c;
  c.device_seed = derive_seed(0, "device");
  const Simulator sim(c);
  const auto seq = make_sequence(c.grid, 3, 1000, 0.5, 0);
  const auto start = std::chrono::steady_clock::now();
  const TrainingRun run = train_all_classes(sim, seq, TrainingOptions{}, 0);
  const Evaluation ev = evaluate_response(run.records, run.train_response.values, seq.labels);
  EXPECT_LE(ev.ser, 0.05);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(), 120.0);
}

TEST(TrainAll, NoiselessTestOnTrainingSetReproducesTrainingSer) {
  const Simulator sim = small_sim(3).with_noise_scale(0.0);
  const auto seq = make_sequence(sim.config().grid, 3, 300, 0.5, 5);
  TrainingOptions opts;
  opts.epochs = 300;
  const TrainingRun run = train_all_classes(sim, seq, opts, 2);
  const Evaluation on_train = evaluate_response(run.records, run.train_response.values, seq.labels);
  NoiseStream noise(77);
  const Evaluation on_test = evaluate(run.records, sim, seq, noise);
  EXPECT_EQ(on_test.ser, on_train.ser);
  EXPECT_EQ(on_test.predicted, on_train.predicted);
}

TEST(TrainAll, LiveModeRunsAndKeepsItsBest) {
  const Simulator sim = small_sim(4);
  const auto seq = make_sequence(sim.config().grid, 3, 200, 0.5, 5);
  TrainingOptions opts;
  opts.epochs = 100;
  opts.frozen_matrix = false;
  const TrainingRun a = train_all_classes(sim, seq, opts, 8);
  const TrainingRun b = train_all_classes(sim, seq, opts, 8);
  for (std::size_t c = 0; c < a.records.size(); ++c) {
    EXPECT_EQ(a.records[c].error_curve, b.records[c].error_curve);
    EXPECT_LE(a.records[c].final_error(), a.records[c].error_curve.front());
  }
}

TEST(Evaluate, PlantedOneHotMasksGiveZeroSer) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 7);
  std::vector<int> labels(200);
  for (auto& l : labels) l = pick(rng);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(200, 12);
  for (std::size_t t = 0; t < labels.size(); ++t) m(static_cast<Eigen::Index>(t), labels[t]) = 2.0;
  m.col(10).setConstant(1.0);
  std::vector<TrainRecord> records;
  for (int c = 0; c < 8; ++c) {
    TrainRecord r;
    r.cls = c;
    r.best_mask = BooleanMask::unit(12, static_cast<std::size_t>(c));
    r.normalization = normalize_trace(detect(m, r.best_mask)).normalization;
    records.push_back(r);
  }
  const Evaluation ev = evaluate_response(records, m, labels);
  EXPECT_EQ(ev.ser, 0.0);
  for (double e : ev.class_nmse) EXPECT_EQ(e, 0.0);
}

TEST(Evaluate, RandomMasksAreAtChance) {
  // Untrained masks carry no label information: averaged over devices and
  // masks the symbol error rate sits at 7/8.
  const int runs = 40;
  std::vector<double> sers;
  for (int s = 0; s < runs; ++s) {
    const Simulator sim = small_sim(100 + s);
    const auto train = make_sequence(sim.config().grid, 3, 200, 0.5, 1000 + s);
    const auto test = make_sequence(sim.config().grid, 3, 500, 0.5, 2000 + s);
    NoiseStream n1(s), n2(s + 500);
    const auto m_train = sim.respond(train, n1);
    std::mt19937_64 rng(static_cast<std::uint64_t>(s));
    std::vector<TrainRecord> records;
    for (int c = 0; c < 8; ++c) records.push_back(untrained(m_train.values, rng, c));
    sers.push_back(evaluate(records, sim, test, n2).ser);
  }
  double mean = 0.0;
  for (double v : sers) mean += v;
  mean /= runs;
  double var = 0.0;
  for (double v : sers) var += (v - mean) * (v - mean);
  var /= runs - 1;
  const double se = std::sqrt(var / runs + (7.0 / 64.0) / (500.0 * runs));
  EXPECT_NEAR(mean, 7.0 / 8.0, 5.0 * se);
}

TEST(Evaluate, RecordCountMustMatchClasses) {
  const Simulator sim = small_sim(2);
  const auto seq = make_sequence(sim.config().grid, 3, 20, 0.5, 3);
  std::vector<TrainRecord> records(4);
  NoiseStream noise(0);
  EXPECT_THROW(evaluate(records, sim, seq, noise), DimensionError);
}
