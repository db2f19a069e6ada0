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

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "lavcsel/metrics.hpp"
#include "lavcsel/optics.hpp"

using namespace lavcsel;

namespace {

SimulatorConfig small_config(std::uint64_t seed = 1) {
  SimulatorConfig c;
  c.grid = Grid{32, 15.0};
  c.params.sites = 256;
  c.params.nodes = 60;
  c.device_seed = seed;
  return c;
}

const Simulator& default_sim() {
  static const Simulator sim([] {
    SimulatorConfig c;
    c.device_seed = 1;
    return c;
  }());
  return sim;
}

}  // namespace

TEST(Transmission, Deterministic) {
  const auto a = build_transmission_matrix(4, 4, 1);
  const auto b = build_transmission_matrix(4, 4, 1);
  EXPECT_EQ(a.entries, b.entries);
  EXPECT_NE(a.entries, build_transmission_matrix(4, 4, 2).entries);
}

TEST(Transmission, MeanPowerIsOneOverP) {
  const Eigen::Index m = 100, p = 1000;
  const auto w = build_transmission_matrix(m, p, 5);
  const double n = static_cast<double>(m * p);
  const double mean = w.entries.cwiseAbs2().sum() / n;
  // |w|^2 is exponential with mean and sd 1/p.
  const double sd_of_mean = (1.0 / p) / std::sqrt(n);
  EXPECT_NEAR(mean, 1.0 / p, 3.0 * sd_of_mean);
}

TEST(Inject, ZeroInputGivesZeroField) {
  const auto w = build_transmission_matrix(16, 10, 3);
  const Bits u(10, 0);
  EXPECT_EQ(inject(w, u, 2.0).squaredNorm(), 0.0);
}

TEST(Inject, PowerNormalisationAndScaling) {
  const auto w = build_transmission_matrix(16, 10, 3);
  Bits u(10, 0);
  u[2] = u[7] = 1;
  const Field a2 = inject(w, u, 2.0);
  EXPECT_NEAR(a2.squaredNorm(), 2.0, 1e-12);
  const Field a4 = inject(w, u, 4.0);
  for (Eigen::Index i = 0; i < a2.size(); ++i) EXPECT_NEAR(std::norm(a4(i)), 2.0 * std::norm(a2(i)), 1e-12);
}

TEST(Inject, Errors) {
  const auto w = build_transmission_matrix(16, 10, 3);
  EXPECT_THROW(inject(w, Bits(9, 1), 1.0), DimensionError);
  EXPECT_THROW(inject(w, Bits(10, 1), -1.0), DomainError);
}

TEST(Locking, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(locking_efficiency(0.0, 1.0, 0.15), 1.0);
  EXPECT_NEAR(locking_efficiency(0.15, 1.0, 0.15), 0.5, 1e-15);
  EXPECT_NEAR(locking_efficiency(0.15, 4.0, 0.15), 1.0 / (1.0 + 1.0 / 4.0), 1e-15);
  EXPECT_NEAR(locking_efficiency(-0.15, 1.0, 0.15), 0.5, 1e-15);
  EXPECT_LT(locking_efficiency(0.45, 1.0, 0.15), locking_efficiency(0.15, 1.0, 0.15));
  EXPECT_THROW(locking_efficiency(0.0, 1.0, 0.0), DomainError);
}

TEST(Coupling, LocalKernelRowsSumToOne) {
  const Eigen::MatrixXd k = CouplingOperator::local_kernel(50, 1.5);
  for (Eigen::Index i = 0; i < k.rows(); ++i) EXPECT_NEAR(k.row(i).sum(), 1.0, 1e-12);
  EXPECT_EQ(CouplingOperator::local_kernel(9, 0.0), Eigen::MatrixXd::Identity(9, 9));
}

TEST(Coupling, GlobalMixIsUnitary) {
  const Eigen::MatrixXcd u = CouplingOperator::global_mix(64, 9);
  const Eigen::MatrixXcd g = u.adjoint() * u;
  EXPECT_LT((g - Eigen::MatrixXcd::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Coupling, FullMixConservesPowerWithoutRescale) {
  const CouplingOperator d(64, 2.0, 1.0, 4);
  const auto w = build_transmission_matrix(64, 20, 2);
  const Field a = inject(w, Bits(20, 1), 1.7);
  EXPECT_NEAR((d.matrix() * a).squaredNorm(), 1.7, 1e-12);
  EXPECT_NEAR(d.apply(a).squaredNorm(), 1.7, 1e-12);
}

TEST(Coupling, ApplyConservesPower) {
  const CouplingOperator d(100, 2.0, 0.3, 4);
  const auto w = build_transmission_matrix(100, 20, 2);
  Bits u(20, 0);
  u[1] = u[5] = u[11] = 1;
  EXPECT_NEAR(d.apply(inject(w, u, 0.6)).squaredNorm(), 0.6, 1e-12);
}

TEST(FreeRunning, NormalisedAndNonNegative) {
  const Eigen::VectorXd f = free_running_pattern(1024, 3);
  EXPECT_NEAR(f.sum(), 1.0, 1e-12);
  EXPECT_GE(f.minCoeff(), 0.0);
  EXPECT_EQ(f, free_running_pattern(1024, 3));
}

TEST(SteadyState, ZeroInjectionIsFreeRunning) {
  ReservoirParams p;
  p.sites = 64;
  p.noise_scale = 0.0;
  p.delta_lambda_nm = 0.1;
  const CouplingOperator d(64, 2.0, 0.5, 1);
  const Eigen::VectorXd f = free_running_pattern(64, 2);
  NoiseStream noise(1);
  const Eigen::VectorXd x = vcsel_steady_state(Field::Zero(64), d, f, p, &noise);
  const double eta = locking_efficiency(0.1, p.power_ratio, p.lock_width_nm);
  for (Eigen::Index i = 0; i < 64; ++i) EXPECT_NEAR(x(i), (1.0 - eta) * 64.0 * f(i), 1e-12);
}

TEST(SteadyState, SmallSignalIsLinear) {
  const Eigen::Index m = 64;
  ReservoirParams p;
  p.sites = static_cast<int>(m);
  p.power_ratio = 1e-4;
  p.gain = 1.3;
  const CouplingOperator identity(m, 0.0, 0.0, 0);
  const Eigen::VectorXd f = free_running_pattern(m, 2);
  const auto w = build_transmission_matrix(m, 30, 8);
  Bits u(30, 0);
  for (std::size_t j = 0; j < u.size(); j += 3) u[j] = 1;
  const Field a = inject(w, u, p.power_ratio);
  const Eigen::VectorXd x = vcsel_steady_state(a, identity, f, p, nullptr);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double linear = p.gain * m * std::norm(a(i));
    EXPECT_NEAR(x(i), linear, 0.01 * linear + 1e-300);
  }
}

TEST(SteadyState, IdentityCouplingMatchesClosedForm) {
  const Eigen::Index m = 49;
  ReservoirParams p;
  p.sites = static_cast<int>(m);
  p.delta_lambda_nm = 0.07;
  p.power_ratio = 2.5;
  p.bias_ratio = 1.3;
  const CouplingOperator identity(m, 0.0, 0.0, 0);
  const Eigen::VectorXd f = free_running_pattern(m, 4);
  const auto w = build_transmission_matrix(m, 12, 8);
  const Field a = inject(w, Bits(12, 1), p.power_ratio);
  const Eigen::VectorXd x = vcsel_steady_state(a, identity, f, p, nullptr);
  const double eta = locking_efficiency(p.delta_lambda_nm, p.power_ratio, p.lock_width_nm);
  const double isat = p.sat_scale / (p.bias_ratio - 1.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = m * std::norm(a(i));
    const double expect = eta * p.gain * s / (1.0 + s / isat) + (1.0 - eta) * m * f(i);
    EXPECT_NEAR(x(i), expect, 1e-12 * (1.0 + expect));
  }
}

TEST(SteadyState, RejectsNonFiniteField) {
  ReservoirParams p;
  p.sites = 4;
  const CouplingOperator d(4, 0.0, 0.0, 0);
  Field a = Field::Zero(4);
  a(1) = {std::nan(""), 0.0};
  EXPECT_THROW(vcsel_steady_state(a, d, Eigen::VectorXd::Constant(4, 0.25), p, nullptr), NumericError);
}

TEST(Params, Validation) {
  ReservoirParams p;
  p.power_ratio = -1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.bias_ratio = 1.0;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  p.nodes = p.sites + 1;
  EXPECT_THROW(p.validate(), DomainError);
  p = {};
  ReservoirParams q;
  q.power_ratio = 1.2;
  EXPECT_NE(p.hash(), q.hash());
  EXPECT_EQ(p.hash(), ReservoirParams{}.hash());
}

TEST(Params, NoiseShrinksWithBiasAndPower) {
  ReservoirParams a, b;
  a.bias_ratio = 1.1;
  b.bias_ratio = 1.5;
  EXPECT_GT(a.noise_sigma(), b.noise_sigma());
  a = b;
  b.power_ratio = 3.6;
  EXPECT_GT(a.noise_sigma(), b.noise_sigma());
  EXPECT_GT(ReservoirParams{.bias_ratio = 1.1}.saturation_intensity(), ReservoirParams{}.saturation_intensity());
}

TEST(Nodes, FullSelectionIsIdentity) {
  const auto layout = make_node_layout(20, 20, 3);
  for (std::size_t k = 0; k < layout.size(); ++k) EXPECT_EQ(layout.sites[k], static_cast<Eigen::Index>(k));
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(20, 0.0, 19.0);
  EXPECT_EQ(sample_nodes(x, layout), x);
}

TEST(Nodes, DistinctSortedDeterministic) {
  const auto a = make_node_layout(1024, 350, 11);
  EXPECT_EQ(a.sites, make_node_layout(1024, 350, 11).sites);
  EXPECT_EQ(std::set<Eigen::Index>(a.sites.begin(), a.sites.end()).size(), 350u);
  EXPECT_TRUE(std::is_sorted(a.sites.begin(), a.sites.end()));
  EXPECT_GE(a.sites.front(), 0);
  EXPECT_LT(a.sites.back(), 1024);
  EXPECT_THROW(make_node_layout(10, 11, 0), DomainError);
}

TEST(Simulator, FastPathMatchesFullChain) {
  const Simulator sim(small_config());
  const auto& cfg = sim.config();
  for (int c = 0; c < 8; ++c) {
    const auto pat = make_header_pattern(cfg.grid, cfg.n_bits, c, cfg.ring_fraction);
    const Eigen::VectorXd fast = sim.site_intensities(c);
    const Eigen::VectorXd direct = sim.site_intensities_direct(pattern_to_vector(pat));
    EXPECT_LT((fast - direct).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + direct.cwiseAbs().maxCoeff())) << c;
  }
  const Simulator off = sim.with_response(ResponseModel::passive);
  for (int c = 0; c < 8; ++c) {
    const auto pat = make_header_pattern(cfg.grid, cfg.n_bits, c, cfg.ring_fraction);
    EXPECT_LT((off.site_intensities(c) - off.site_intensities_direct(pattern_to_vector(pat))).cwiseAbs().maxCoeff(),
              1e-10);
  }
}

TEST(Simulator, ForeignLayoutUsesFullChain) {
  const Simulator sim(small_config());
  const auto pat = make_header_pattern(sim.config().grid, 3, 5, 0.25);
  EXPECT_EQ(sim.site_intensities(pat), sim.site_intensities_direct(pattern_to_vector(pat)));
}

TEST(Simulator, SingleStepResponse) {
  const Simulator sim(small_config());
  const auto seq = make_sequence(sim.config().grid, 3, 1, 0.5, 4);
  const auto m = sim.noiseless_response(seq);
  ASSERT_EQ(m.steps(), 1);
  ASSERT_EQ(m.nodes(), 60);
  EXPECT_EQ(Eigen::VectorXd(m.values.row(0).transpose()), sim.node_intensities(seq.patterns[0]));
}

TEST(Simulator, NoiselessIsDeterministicAndPure) {
  const Simulator sim = Simulator(small_config()).with_noise_scale(0.0);
  const auto seq = make_sequence(sim.config().grid, 3, 40, 0.5, 4);
  NoiseStream n1(1), n2(2);
  const auto a = sim.respond(seq, n1);
  const auto b = sim.respond(seq, n2);
  EXPECT_EQ(a.values, b.values);
  for (std::size_t t1 = 0; t1 < seq.size(); ++t1) {
    for (std::size_t t2 = t1 + 1; t2 < seq.size(); ++t2) {
      if (seq.labels[t1] == seq.labels[t2]) {
        EXPECT_EQ(a.values.row(static_cast<Eigen::Index>(t1)), a.values.row(static_cast<Eigen::Index>(t2)));
      }
    }
  }
}

TEST(Simulator, NoiseHasConfiguredSpread) {
  const Simulator sim(small_config());
  const auto seq = make_sequence(sim.config().grid, 3, 400, 0.5, 4);
  const auto clean = sim.noiseless_response(seq);
  NoiseStream noise(9);
  const auto noisy = sim.add_noise(clean, noise);
  EXPECT_GE(noisy.values.minCoeff(), 0.0);
  // Nodes well above zero are unaffected by the clamp.
  double ss = 0.0;
  long count = 0;
  const double sigma = sim.params().noise_sigma();
  for (Eigen::Index t = 0; t < clean.steps(); ++t) {
    for (Eigen::Index i = 0; i < clean.nodes(); ++i) {
      if (clean.values(t, i) > 6.0 * sigma) {
        const double d = noisy.values(t, i) - clean.values(t, i);
        ss += d * d;
        ++count;
      }
    }
  }
  ASSERT_GT(count, 1000);
  const double var = ss / static_cast<double>(count);
  EXPECT_NEAR(var / (sigma * sigma), 1.0, 5.0 * std::sqrt(2.0 / static_cast<double>(count)));
}

TEST(Simulator, WithParamsSharesDevice) {
  const Simulator sim(small_config());
  ReservoirParams p = sim.params();
  p.power_ratio = 2.0;
  p.bias_ratio = 1.2;
  const Simulator other = sim.with_params(p);
  EXPECT_EQ(&other.transmission(), &sim.transmission());
  p.nodes = 30;
  const Simulator rebuilt = sim.with_params(p);
  EXPECT_EQ(rebuilt.nodes(), 30);
  EXPECT_EQ(rebuilt.transmission().entries, sim.transmission().entries);
}

TEST(Simulator, PassiveModeIsLinearInInput) {
  const Simulator off = Simulator(small_config()).with_response(ResponseModel::passive);
  EXPECT_LT(nonlinearity_probe(off).score, 1e-9);
  const auto& d = default_sim().with_response(ResponseModel::passive);
  EXPECT_LT(nonlinearity_probe(d).score, 1e-9);
}

TEST(Simulator, ProbeGrowsWithBias) {
  const Simulator& sim = default_sim();
  ReservoirParams lo = sim.params();
  lo.bias_ratio = 1.1;
  ReservoirParams hi = sim.params();
  hi.bias_ratio = 1.5;
  EXPECT_GT(nonlinearity_probe(sim.with_params(hi)).score, nonlinearity_probe(sim.with_params(lo)).score);
}

TEST(Simulator, SingleSiteSaturationOracle) {
  // One site, identity coupling, perfect locking: x = g s / (1 + s / I_sat).
  // Intensities that add linearly in the header bits make any superposition
  // error a pure saturation effect. It deepens with power while the brightest
  // header stays below I_sat; far beyond it every header pins to g * I_sat
  // and the error washes out again.
  ReservoirParams p;
  p.sites = 1;
  p.nodes = 1;
  p.bias_ratio = 1.5;
  const CouplingOperator identity(1, 0.0, 0.0, 0);
  const Eigen::VectorXd f = Eigen::VectorXd::Ones(1);
  const double ring = 0.5;
  const double w[3] = {0.2, 0.7, 1.1};
  const double isat = p.saturation_intensity();
  auto intensity = [&](double power, int cls) {
    double s = ring;
    for (int j = 0; j < 3; ++j) s += ((cls >> j) & 1) * w[j];
    return s * power;
  };
  auto response = [&](double power, int cls) {
    const double s = intensity(power, cls);
    Field a(1);
    a(0) = std::sqrt(s);
    const double x = detail::emit(a, identity, f, p)(0);
    EXPECT_NEAR(x, p.gain * s / (1.0 + s / isat), 1e-12 * (1.0 + x));
    return x;
  };
  auto score = [&](double power) {
    const double dev = std::abs(response(power, 1) + response(power, 2) + response(power, 4) -
                                response(power, 7) - 2.0 * response(power, 0));
    return dev / response(power, 7);
  };
  EXPECT_LT(score(1e-9), 1e-8);
  double previous = 0.0;
  double power = 1.0 / 1024.0;
  for (; intensity(power, 7) <= isat; power *= 2.0) {
    const double d = score(power);
    EXPECT_GT(d, previous) << power;
    previous = d;
  }
  EXPECT_LT(score(1e6), previous);
}
