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

// Passive input weights (multimode fibre) and the steady-state response of the
// injection-locked large-area VCSEL.
//
// Intensity units: a site intensity of 1 is the free-running VCSEL power
// spread evenly over all m sites, i.e. site value = m * |field|^2 when the
// field is normalised to total power PR (in units of the free-running power).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "lavcsel/encoder.hpp"
#include "lavcsel/error.hpp"
#include "lavcsel/random.hpp"
#include "lavcsel/state_matrix.hpp"

namespace lavcsel {

using Field = Eigen::VectorXcd;

namespace units {
inline constexpr double kThresholdCurrent_mA = 20.0;
inline constexpr double kResonanceWavelength_nm = 918.9;
inline constexpr double kVcselPowerAt1p5_mW = 3.6;

inline constexpr double bias_current_mA(double bias_ratio) { return bias_ratio * kThresholdCurrent_mA; }
inline constexpr double injection_wavelength_nm(double delta_nm) { return kResonanceWavelength_nm + delta_nm; }
}  // namespace units

enum class ResponseModel {
  vcsel,    // injection-locked saturable emitter
  passive,  // device switched off: incoherent pass-through, linear in the input
};

struct ReservoirParams {
  double bias_ratio = 1.5;       // I_bias / I_th, > 1
  double power_ratio = 1.0;      // P_inj / P_VCSEL, >= 0
  double delta_lambda_nm = 0.0;  // detuning from the 918.9 nm resonance
  double lock_width_nm = 0.15;
  double sat_scale = 1.0;
  double noise_scale = 0.02;
  double gain = 1.0;
  double mix_weight = 0.5;             // share of the global (diffractive) coupling
  double diffusion_length_sites = 2.0;  // <= 0 disables local coupling
  int sites = 1024;
  int nodes = 350;
  ResponseModel response = ResponseModel::vcsel;

  void validate() const {
    detail::require_domain(bias_ratio > 1.0, "bias_ratio must be > 1");
    detail::require_domain(power_ratio >= 0.0 && std::isfinite(power_ratio), "power_ratio must be >= 0");
    detail::require_domain(std::isfinite(delta_lambda_nm), "delta_lambda_nm must be finite");
    detail::require_domain(lock_width_nm > 0.0, "lock_width_nm must be > 0");
    detail::require_domain(sat_scale > 0.0, "sat_scale must be > 0");
    detail::require_domain(noise_scale >= 0.0, "noise_scale must be >= 0");
    detail::require_domain(gain > 0.0, "gain must be > 0");
    detail::require_domain(mix_weight >= 0.0 && mix_weight <= 1.0, "mix_weight must be in [0, 1]");
    detail::require_domain(std::isfinite(diffusion_length_sites), "diffusion_length_sites must be finite");
    detail::require_domain(sites >= 1, "sites must be >= 1");
    detail::require_domain(nodes >= 1 && nodes <= sites, "nodes must be in [1, sites]");
  }

  double saturation_intensity() const { return sat_scale / (bias_ratio - 1.0); }

  /// Spontaneous-emission noise shrinks away from threshold and under
  /// stronger injection.
  double noise_sigma() const { return noise_scale / ((bias_ratio - 1.0) * (1.0 + power_ratio)); }

  std::uint64_t hash() const {
    auto bits = [](double v) {
      std::uint64_t u;
      std::memcpy(&u, &v, sizeof u);
      return u;
    };
    return derive_seed(0x7265736572766f69ULL,
                       {bits(bias_ratio), bits(power_ratio), bits(delta_lambda_nm), bits(lock_width_nm),
                        bits(sat_scale), bits(noise_scale), bits(gain), bits(mix_weight),
                        bits(diffusion_length_sites), static_cast<std::uint64_t>(sites),
                        static_cast<std::uint64_t>(nodes), static_cast<std::uint64_t>(response)});
  }
};

// ---------------------------------------------------------------------------
// Input weights

struct TransmissionMatrix {
  Eigen::MatrixXcd entries;  // m x p
  std::uint64_t seed = 0;

  Eigen::Index sites() const noexcept { return entries.rows(); }
  Eigen::Index pixels() const noexcept { return entries.cols(); }
};

/// i.i.d. circular complex Gaussian entries with E|w|^2 = 1/p.
inline TransmissionMatrix build_transmission_matrix(Eigen::Index m, Eigen::Index p, std::uint64_t seed) {
  detail::require_domain(m >= 1 && p >= 1, "transmission matrix needs m, p >= 1");
  TransmissionMatrix w;
  w.seed = seed;
  w.entries.resize(m, p);
  std::mt19937_64 rng(derive_seed(seed, "transmission"));
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 / static_cast<double>(p)));
  // Column-major fill keeps the stream layout independent of Eigen internals.
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      w.entries(i, j) = {re, im};
    }
  }
  return w;
}

/// Rescale a field to total power `power`; a zero field stays zero.
inline Field scale_to_power(Field a, double power) {
  const double norm2 = a.squaredNorm();
  if (norm2 > 0.0) a *= std::sqrt(power / norm2);
  return a;
}

inline Field inject(const TransmissionMatrix& w, const Bits& u, double power_ratio) {
  detail::require_dims(static_cast<Eigen::Index>(u.size()) == w.pixels(),
                       "input vector length " + std::to_string(u.size()) + " != transmission matrix columns " +
                           std::to_string(w.pixels()));
  detail::require_domain(power_ratio >= 0.0, "power_ratio must be >= 0");
  Field a = Field::Zero(w.sites());
  for (Eigen::Index j = 0; j < w.pixels(); ++j) {
    if (u[static_cast<std::size_t>(j)]) a += w.entries.col(j);
  }
  return scale_to_power(std::move(a), power_ratio);
}

// ---------------------------------------------------------------------------
// Locking

/// Lorentzian locking efficiency; the locking range widens as sqrt(PR).
inline double locking_efficiency(double delta_lambda_nm, double power_ratio, double lock_width_nm) {
  detail::require_domain(lock_width_nm > 0.0, "lock_width_nm must be > 0");
  constexpr double kMinPowerRatio = 1e-12;
  const double width = lock_width_nm * std::sqrt(std::max(power_ratio, kMinPowerRatio));
  const double r = delta_lambda_nm / width;
  return 1.0 / (1.0 + r * r);
}

// ---------------------------------------------------------------------------
// Intra-cavity coupling

/// Sites sit on a row-major grid `width` sites wide.
inline int site_grid_width(Eigen::Index m) {
  return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m)) - 1e-9));
}

/// D = (1 - gamma) * K + gamma * U, with K a unit-sum Gaussian blur over the
/// site grid and U = P2 * F * P1 (random phase screens around a unitary DFT).
/// `apply` rescales its output to the input power.
class CouplingOperator {
 public:
  CouplingOperator() = default;

  CouplingOperator(Eigen::Index m, double diffusion_length_sites, double mix_weight, std::uint64_t seed)
      : mix_weight_(mix_weight), diffusion_length_(diffusion_length_sites), seed_(seed) {
    detail::require_domain(m >= 1, "coupling needs at least one site");
    detail::require_domain(mix_weight >= 0.0 && mix_weight <= 1.0, "mix_weight must be in [0, 1]");
    matrix_ = Eigen::MatrixXcd::Zero(m, m);
    if (mix_weight < 1.0) matrix_.real() += (1.0 - mix_weight) * local_kernel(m, diffusion_length_sites);
    if (mix_weight > 0.0) matrix_ += mix_weight * global_mix(m, seed);
  }

  static Eigen::MatrixXd local_kernel(Eigen::Index m, double ell) {
    if (ell <= 0.0) return Eigen::MatrixXd::Identity(m, m);
    const int width = site_grid_width(m);
    const int reach = static_cast<int>(std::ceil(4.0 * ell));
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const int ri = static_cast<int>(i / width);
      const int ci = static_cast<int>(i % width);
      double total = 0.0;
      for (int dr = -reach; dr <= reach; ++dr) {
        for (int dc = -reach; dc <= reach; ++dc) {
          const int r = ri + dr;
          const int c = ci + dc;
          if (r < 0 || c < 0 || c >= width) continue;
          const Eigen::Index j = static_cast<Eigen::Index>(r) * width + c;
          if (j >= m) continue;
          const double v = std::exp(-(dr * dr + dc * dc) / (2.0 * ell * ell));
          k(i, j) = v;
          total += v;
        }
      }
      k.row(i) /= total;
    }
    return k;
  }

  static Eigen::MatrixXcd global_mix(Eigen::Index m, std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, "global_mix"));
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::vector<std::complex<double>> p1(static_cast<std::size_t>(m));
    std::vector<std::complex<double>> p2(static_cast<std::size_t>(m));
    for (auto& z : p1) z = std::polar(1.0, phase(rng));
    for (auto& z : p2) z = std::polar(1.0, phase(rng));
    Eigen::MatrixXcd u(m, m);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (Eigen::Index k = 0; k < m; ++k) {
      for (Eigen::Index j = 0; j < m; ++j) {
        // (j * k) mod m keeps the twiddle argument small and exact.
        const auto jk = static_cast<double>((static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(k)) %
                                            static_cast<std::uint64_t>(m));
        const auto f = std::polar(scale, -2.0 * std::numbers::pi * jk / static_cast<double>(m));
        u(j, k) = p2[static_cast<std::size_t>(j)] * f * p1[static_cast<std::size_t>(k)];
      }
    }
    return u;
  }

  Field apply(const Field& a) const {
    detail::require_dims(a.size() == matrix_.cols(), "field length does not match coupling operator");
    Field b = matrix_ * a;
    const double in = a.squaredNorm();
    const double out = b.squaredNorm();
    if (out > 0.0) b *= std::sqrt(in / out);
    return b;
  }

  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  double mix_weight() const noexcept { return mix_weight_; }
  double diffusion_length() const noexcept { return diffusion_length_; }
  std::uint64_t seed() const noexcept { return seed_; }
  Eigen::Index sites() const noexcept { return matrix_.rows(); }

 private:
  Eigen::MatrixXcd matrix_;
  double mix_weight_ = 0.5;
  double diffusion_length_ = 2.0;
  std::uint64_t seed_ = 0;
};

/// Multi-lobed free-running emission: a seeded mix of a few low-order
/// Hermite-Gauss intensity profiles, normalised to total power 1.
inline Eigen::VectorXd free_running_pattern(Eigen::Index m, std::uint64_t seed) {
  const int width = site_grid_width(m);
  const double rows = std::ceil(static_cast<double>(m) / width);
  std::mt19937_64 rng(derive_seed(seed, "free_running"));
  std::uniform_int_distribution<int> order(0, 3);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  std::uniform_real_distribution<double> offset(-0.15, 0.15);

  auto hermite = [](int n, double x) {
    double h0 = 1.0;
    if (n == 0) return h0;
    double h1 = 2.0 * x;
    for (int k = 1; k < n; ++k) {
      const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
      h0 = h1;
      h1 = h2;
    }
    return h1;
  };

  constexpr int kModes = 4;
  constexpr double kWaist = 0.55;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
  for (int mode = 0; mode < kModes; ++mode) {
    const int nx = order(rng);
    const int ny = order(rng);
    const double w = weight(rng);
    const double ox = offset(rng);
    const double oy = offset(rng);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double x = 2.0 * ((static_cast<double>(i % width) + 0.5) / width - 0.5) - ox;
      const double y = 2.0 * ((static_cast<double>(i / width) + 0.5) / rows - 0.5) - oy;
      const double hx = hermite(nx, std::sqrt(2.0) * x / kWaist);
      const double hy = hermite(ny, std::sqrt(2.0) * y / kWaist);
      f(i) += w * hx * hx * hy * hy * std::exp(-2.0 * (x * x + y * y) / (kWaist * kWaist));
    }
  }
  const double total = f.sum();
  if (total > 0.0) f /= total;
  else f.setConstant(1.0 / static_cast<double>(m));
  return f;
}

// ---------------------------------------------------------------------------
// Steady state

namespace detail {

/// Noiseless emission for an injected field `a` of total power PR. Gain
/// saturation acts on the injected field site by site,
///   a'_i = a_i * sqrt(g / (1 + s_i / I_sat)),  s_i = m |a_i|^2,
/// and the cavity coupling then redistributes the saturated field:
///   x_i = eta * m |(D a')_i|^2 + (1 - eta) * m f_i.
/// With identity coupling this is eta*g*s_i/(1 + s_i/I_sat) + (1-eta)*m*f_i.
inline Eigen::VectorXd emit(Field a, const CouplingOperator& coupling, const Eigen::VectorXd& free_running,
                            const ReservoirParams& params) {
  const Eigen::Index sites = a.size();
  const auto m = static_cast<double>(sites);
  const double isat = params.saturation_intensity();
  for (Eigen::Index i = 0; i < sites; ++i) {
    const double s = m * std::norm(a(i));
    a(i) *= std::sqrt(params.gain / (1.0 + s / isat));
  }
  const Field b = coupling.apply(a);
  const double eta = locking_efficiency(params.delta_lambda_nm, params.power_ratio, params.lock_width_nm);
  Eigen::VectorXd x(sites);
  for (Eigen::Index i = 0; i < sites; ++i) {
    x(i) = eta * m * std::norm(b(i)) + (1.0 - eta) * m * free_running(i);
  }
  return x;
}

}  // namespace detail

/// Steady-state site intensities for injected field `a` (see detail::emit),
/// plus i.i.d. N(0, sigma^2) spontaneous-emission noise when `noise` is
/// given, clamped at zero.
inline Eigen::VectorXd vcsel_steady_state(const Field& a, const CouplingOperator& coupling,
                                          const Eigen::VectorXd& free_running, const ReservoirParams& params,
                                          NoiseStream* noise) {
  if (!a.allFinite()) throw NumericError("injected field is not finite");
  detail::require_dims(a.size() == coupling.sites() && free_running.size() == a.size(),
                       "field, coupling and free-running pattern must share the site count");
  Eigen::VectorXd x = detail::emit(a, coupling, free_running, params);
  const double sigma = noise ? params.noise_sigma() : 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (noise) x(i) += noise->normal(sigma);
    x(i) = std::max(x(i), 0.0);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Readout sampling

/// Sorted, distinct site indices seen by the readout mirrors.
struct NodeLayout {
  std::vector<Eigen::Index> sites;

  std::size_t size() const noexcept { return sites.size(); }
};

inline NodeLayout make_node_layout(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  detail::require_domain(n >= 1, "node count must be >= 1");
  if (n > m) throw DomainError("cannot sample " + std::to_string(n) + " nodes from " + std::to_string(m) + " sites");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(m));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  std::mt19937_64 rng(derive_seed(seed, "nodes"));
  // Partial Fisher-Yates with an explicit index draw, independent of the
  // standard library's shuffle implementation.
  for (Eigen::Index i = 0; i < n; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, m - 1);
    std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(pick(rng))]);
  }
  NodeLayout layout;
  layout.sites.assign(all.begin(), all.begin() + n);
  std::sort(layout.sites.begin(), layout.sites.end());
  return layout;
}

/// Node intensities x (length n) picked from the m site intensities.
inline Eigen::VectorXd sample_nodes(const Eigen::VectorXd& site_intensities, const NodeLayout& layout) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const Eigen::Index s = layout.sites[k];
    detail::require_dims(s < site_intensities.size(), "node index outside the site range");
    x(static_cast<Eigen::Index>(k)) = site_intensities(s);
  }
  return x;
}

inline Eigen::VectorXd sample_nodes(const Eigen::VectorXd& site_intensities, Eigen::Index n,
                                    std::uint64_t layout_seed) {
  return sample_nodes(site_intensities, make_node_layout(site_intensities.size(), n, layout_seed));
}

// ---------------------------------------------------------------------------
// Simulator

struct SimulatorConfig {
  Grid grid;
  int n_bits = 3;
  double ring_fraction = 0.5;
  ReservoirParams params;
  std::uint64_t device_seed = 0;
};

/// A configured encoder + fibre + VCSEL + readout chain. Immutable after
/// construction; the heavy device data is shared between copies made with
/// `with_params`, so one instance can serve any number of threads.
class Simulator {
 public:
  explicit Simulator(SimulatorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.params.validate();
    device_ = build_device(cfg_);
  }

  const SimulatorConfig& config() const noexcept { return cfg_; }
  const ReservoirParams& params() const noexcept { return cfg_.params; }
  const HeaderLayout& layout() const noexcept { return device_->layout; }
  const TransmissionMatrix& transmission() const noexcept { return device_->transmission; }
  const CouplingOperator& coupling() const noexcept { return device_->coupling; }
  const Eigen::VectorXd& free_running() const noexcept { return device_->free_running; }
  const NodeLayout& node_layout() const noexcept { return device_->nodes; }
  Eigen::Index sites() const noexcept { return cfg_.params.sites; }
  Eigen::Index nodes() const noexcept { return cfg_.params.nodes; }

  /// Same device, new operating point. The device is rebuilt only when a
  /// structural parameter (site/node count, coupling constants) changes.
  Simulator with_params(const ReservoirParams& params) const {
    SimulatorConfig next = cfg_;
    next.params = params;
    next.params.validate();
    const ReservoirParams& old = cfg_.params;
    if (params.sites == old.sites && params.nodes == old.nodes && params.mix_weight == old.mix_weight &&
        params.diffusion_length_sites == old.diffusion_length_sites) {
      return Simulator(std::move(next), device_);
    }
    return Simulator(std::move(next));
  }

  Simulator with_response(ResponseModel model) const {
    ReservoirParams p = cfg_.params;
    p.response = model;
    return with_params(p);
  }

  Simulator with_noise_scale(double noise_scale) const {
    ReservoirParams p = cfg_.params;
    p.noise_scale = noise_scale;
    return with_params(p);
  }

  /// Noiseless intensities at all m sites for a header of the configured layout.
  Eigen::VectorXd site_intensities(std::int64_t class_id) const {
    check_class_id(cfg_.n_bits, class_id);
    const Device& d = *device_;
    const auto m = static_cast<double>(sites());
    const ReservoirParams& p = cfg_.params;
    if (p.response == ResponseModel::passive) {
      Eigen::VectorXd power = Eigen::VectorXd::Zero(sites());
      for (int r = 0; r < d.region_count(); ++r) {
        if (region_on(r, class_id)) power += d.passive_region_power.col(r);
      }
      return power * (m * p.power_ratio / d.passive_total_power);
    }
    Field a = Field::Zero(sites());
    for (int r = 0; r < d.region_count(); ++r) {
      if (region_on(r, class_id)) a += d.region_fields.col(r);
    }
    return detail::emit(scale_to_power(std::move(a), p.power_ratio), d.coupling, d.free_running, p).cwiseMax(0.0);
  }

  /// Noiseless intensities at all m sites for an arbitrary pattern, through
  /// the full inject -> couple -> saturate chain.
  Eigen::VectorXd site_intensities(const InputPattern& pat) const {
    if (matches_layout(pat.grid, pat.n_bits, pat.ring_fraction)) return site_intensities(pat.class_id);
    return site_intensities_direct(pattern_to_vector(pat));
  }

  Eigen::VectorXd site_intensities_direct(const Bits& u) const {
    const Device& d = *device_;
    const ReservoirParams& p = cfg_.params;
    if (p.response == ResponseModel::passive) {
      detail::require_dims(static_cast<Eigen::Index>(u.size()) == d.transmission.pixels(),
                           "input vector length does not match the transmission matrix");
      Eigen::VectorXd power = Eigen::VectorXd::Zero(sites());
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j]) power += d.transmission.entries.col(static_cast<Eigen::Index>(j)).cwiseAbs2();
      }
      return power * (static_cast<double>(sites()) * p.power_ratio / d.passive_total_power);
    }
    return vcsel_steady_state(inject(d.transmission, u, p.power_ratio), d.coupling, d.free_running, p, nullptr);
  }

  Eigen::VectorXd node_intensities(const InputPattern& pat) const {
    return sample_nodes(site_intensities(pat), device_->nodes);
  }

  /// Row t = noiseless node intensities for pattern t.
  StateCollectMatrix noiseless_response(const LabeledSequence& seq) const {
    StateCollectMatrix out;
    out.sequence_seed = seq.seed;
    out.params_hash = cfg_.params.hash();
    out.values.resize(static_cast<Eigen::Index>(seq.size()), nodes());
    const bool fast = matches_layout(seq.grid, seq.n_bits, seq.ring_fraction);
    std::unordered_map<std::int64_t, Eigen::VectorXd> cache;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const auto row = static_cast<Eigen::Index>(t);
      if (fast) {
        const std::int64_t c = seq.labels[t];
        auto it = cache.find(c);
        if (it == cache.end()) it = cache.emplace(c, sample_nodes(site_intensities(c), device_->nodes)).first;
        out.values.row(row) = it->second.transpose();
      } else {
        out.values.row(row) = node_intensities(seq.patterns[t]).transpose();
      }
    }
    return out;
  }

  /// Adds i.i.d. detector-plane noise to a noiseless response and clamps at 0.
  StateCollectMatrix add_noise(StateCollectMatrix m, NoiseStream& noise) const {
    const double sigma = cfg_.params.noise_sigma();
    if (sigma == 0.0) return m;
    for (Eigen::Index t = 0; t < m.values.rows(); ++t) {
      for (Eigen::Index i = 0; i < m.values.cols(); ++i) {
        m.values(t, i) = std::max(m.values(t, i) + noise.normal(sigma), 0.0);
      }
    }
    return m;
  }

  StateCollectMatrix respond(const LabeledSequence& seq, NoiseStream& noise) const {
    return add_noise(noiseless_response(seq), noise);
  }

  bool matches_layout(const Grid& grid, int n_bits, double ring_fraction) const {
    return grid == cfg_.grid && n_bits == cfg_.n_bits && ring_fraction == cfg_.ring_fraction;
  }

 private:
  struct Device {
    HeaderLayout layout;
    TransmissionMatrix transmission;
    CouplingOperator coupling;
    Eigen::VectorXd free_running;
    NodeLayout nodes;
    // W times the indicator of each input region; column 0 is the ring,
    // column 1 + j is sector j.
    Eigen::MatrixXcd region_fields;
    Eigen::MatrixXd passive_region_power;
    double passive_total_power = 1.0;

    int region_count() const noexcept { return static_cast<int>(region_fields.cols()); }
  };

  Simulator(SimulatorConfig cfg, std::shared_ptr<const Device> device)
      : cfg_(std::move(cfg)), device_(std::move(device)) {}

  static bool region_on(int region, std::int64_t class_id) {
    return region == 0 || ((class_id >> (region - 1)) & 1);
  }

  static std::shared_ptr<const Device> build_device(const SimulatorConfig& cfg) {
    auto d = std::make_shared<Device>();
    const ReservoirParams& p = cfg.params;
    d->layout = make_layout(cfg.grid, cfg.n_bits, cfg.ring_fraction);
    const auto pixels = static_cast<Eigen::Index>(d->layout.pixel_count());
    d->transmission = build_transmission_matrix(p.sites, pixels, derive_seed(cfg.device_seed, "transmission"));
    d->coupling = CouplingOperator(p.sites, p.diffusion_length_sites, p.mix_weight,
                                   derive_seed(cfg.device_seed, "coupling"));
    d->free_running = free_running_pattern(p.sites, derive_seed(cfg.device_seed, "free_running"));
    d->nodes = make_node_layout(p.sites, p.nodes, derive_seed(cfg.device_seed, "nodes"));

    const int regions = cfg.n_bits + 1;
    d->region_fields = Eigen::MatrixXcd::Zero(p.sites, regions);
    d->passive_region_power = Eigen::MatrixXd::Zero(p.sites, regions);
    for (Eigen::Index j = 0; j < pixels; ++j) {
      const int r = d->layout.region[static_cast<std::size_t>(j)] + 1;
      d->region_fields.col(r) += d->transmission.entries.col(j);
      d->passive_region_power.col(r) += d->transmission.entries.col(j).cwiseAbs2();
    }
    d->passive_total_power = d->transmission.entries.cwiseAbs2().sum();
    return d;
  }

  SimulatorConfig cfg_;
  std::shared_ptr<const Device> device_;
};

}  // namespace lavcsel
