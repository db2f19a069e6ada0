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

// Hardware-agnostic computational metrics:
//
//  * consistency: mean pairwise Pearson correlation between repeated
//    responses to the same input sequence, for the summed detector signal
//    (all mirrors on) and for every node on its own;
//  * dimensionality: number of principal components of the state-collect
//    matrix that carry meaningful variance, located at the minimum of the
//    factor indicator function
//
//        I(k) = sqrt( sum_{i>k} L_i / (T (n - k)) ) / (n - k)^2
//
//    over the descending covariance eigenvalues L_1..L_n;
//  * a superposition probe that measures how far the response to header 111
//    departs from the summed responses to 001, 010 and 100.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lavcsel/encoder.hpp"
#include "lavcsel/error.hpp"
#include "lavcsel/optics.hpp"
#include "lavcsel/random.hpp"
#include "lavcsel/readout.hpp"
#include "lavcsel/state_matrix.hpp"

namespace lavcsel {

// ---------------------------------------------------------------------------
// Consistency

struct CorrelationResult {
  Eigen::MatrixXd matrix;      // R x R, unit diagonal
  std::vector<int> flagged;    // traces with zero variance (correlations set to 0)
};

/// Zero-lag Pearson correlation between every pair of traces.
inline CorrelationResult correlation_matrix(const std::vector<Eigen::VectorXd>& traces) {
  const auto r = static_cast<Eigen::Index>(traces.size());
  detail::require_domain(r >= 2, "correlation needs at least two traces");
  const Eigen::Index t = traces.front().size();
  detail::require_domain(t >= 2, "correlation needs traces of length >= 2");
  Eigen::MatrixXd centered(t, r);
  Eigen::VectorXd norms(r);
  CorrelationResult out;
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& x = traces[static_cast<std::size_t>(i)];
    detail::require_dims(x.size() == t, "traces must share one length");
    centered.col(i) = x.array() - x.mean();
    norms(i) = centered.col(i).norm();
    if (!(norms(i) > 0.0)) out.flagged.push_back(static_cast<int>(i));
  }
  out.matrix = Eigen::MatrixXd::Identity(r, r);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = i + 1; j < r; ++j) {
      double c = 0.0;
      if (norms(i) > 0.0 && norms(j) > 0.0) {
        c = std::clamp(centered.col(i).dot(centered.col(j)) / (norms(i) * norms(j)), -1.0, 1.0);
      }
      out.matrix(i, j) = out.matrix(j, i) = c;
    }
  }
  return out;
}

inline double upper_triangle_mean(const Eigen::MatrixXd& c) {
  detail::require_domain(c.rows() >= 2 && c.rows() == c.cols(), "need a square matrix of size >= 2");
  double s = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < c.cols(); ++j) {
      s += c(i, j);
      ++count;
    }
  }
  return s / static_cast<double>(count);
}

struct ConsistencyReport {
  int repetitions = 0;
  double c_total = 0.0;
  Eigen::VectorXd c_node;
  std::vector<int> flagged_nodes;  // zero-variance nodes, reported as 0
  bool total_flagged = false;
  Eigen::MatrixXd total_correlation;  // R x R, all mirrors on

  double mean_c_node() const { return c_node.size() ? c_node.mean() : 0.0; }
};

/// Presents `seq` `repetitions` times with independent noise and correlates
/// the responses, both summed over all mirrors and node by node.
inline ConsistencyReport consistency(const Simulator& sim, const LabeledSequence& seq, int repetitions,
                                     std::uint64_t seed) {
  detail::require_domain(repetitions >= 2, "consistency needs at least two repetitions");
  const StateCollectMatrix clean = sim.noiseless_response(seq);
  std::vector<Eigen::MatrixXd> runs;
  runs.reserve(static_cast<std::size_t>(repetitions));
  std::vector<Eigen::VectorXd> totals;
  for (int rep = 0; rep < repetitions; ++rep) {
    NoiseStream noise(derive_seed(seed, {static_cast<std::uint64_t>(rep)}));
    runs.push_back(sim.add_noise(clean, noise).values);
    totals.push_back(runs.back().rowwise().sum());
  }

  ConsistencyReport rep;
  rep.repetitions = repetitions;
  CorrelationResult total = correlation_matrix(totals);
  rep.total_flagged = !total.flagged.empty();
  rep.c_total = upper_triangle_mean(total.matrix);
  rep.total_correlation = std::move(total.matrix);

  const Eigen::Index n = clean.nodes();
  rep.c_node.resize(n);
  std::vector<Eigen::VectorXd> node_traces(static_cast<std::size_t>(repetitions));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int r = 0; r < repetitions; ++r) node_traces[static_cast<std::size_t>(r)] = runs[static_cast<std::size_t>(r)].col(i);
    CorrelationResult c = correlation_matrix(node_traces);
    if (!c.flagged.empty()) {
      rep.flagged_nodes.push_back(static_cast<int>(i));
      rep.c_node(i) = 0.0;
    } else {
      rep.c_node(i) = upper_triangle_mean(c.matrix);
    }
  }
  return rep;
}

inline double consistency_total(const Simulator& sim, const LabeledSequence& seq, int repetitions,
                                std::uint64_t seed) {
  return consistency(sim, seq, repetitions, seed).c_total;
}

inline Eigen::VectorXd consistency_per_node(const Simulator& sim, const LabeledSequence& seq, int repetitions,
                                            std::uint64_t seed) {
  return consistency(sim, seq, repetitions, seed).c_node;
}

// ---------------------------------------------------------------------------
// Dimensionality

/// Sample covariance of the columns of M (divisor T - 1). With
/// `center = false` the raw second moment M^T M / (T - 1) is returned instead.
inline Eigen::MatrixXd covariance(const Eigen::MatrixXd& m, bool center = true) {
  if (m.rows() < 2) throw DomainError("covariance needs at least two time steps");
  Eigen::MatrixXd x = m;
  if (center) x.rowwise() -= m.colwise().mean();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m.cols(), m.cols());
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(m.rows() - 1));
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
  return sigma;
}

struct EigenSpectrum {
  Eigen::VectorXd values;  // descending, clamped at zero
  Eigen::Index steps = 0;  // T of the matrix the covariance came from

  Eigen::Index size() const noexcept { return values.size(); }
};

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& sigma) {
  require_dims(sigma.rows() == sigma.cols(), "covariance must be square");
  const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DomainError("eigen_spectrum expects a symmetric matrix");
  }
}

inline Eigen::VectorXd descending_clamped(const Eigen::VectorXd& ascending) {
  const Eigen::Index n = ascending.size();
  Eigen::VectorXd v = ascending.reverse();
  const double floor = n ? 1e-12 * std::max(v(0), 0.0) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (v(i) < floor || v(i) <= 0.0) v(i) = 0.0;
  }
  return v;
}

}  // namespace detail

/// Eigenvalues of a symmetric covariance (its singular values, since it is
/// positive semi-definite), descending, with values below 1e-12 * L_1 set to 0.
inline EigenSpectrum eigen_spectrum(const Eigen::MatrixXd& sigma, Eigen::Index steps) {
  detail::require_symmetric(sigma);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigen decomposition did not converge");
  return {detail::descending_clamped(solver.eigenvalues()), steps};
}

/// I(k) for k = 1..n-1 (element k-1). k = n is excluded: its (n - k) divisor
/// vanishes.
inline Eigen::VectorXd indicator_function(const EigenSpectrum& spec) {
  const Eigen::Index n = spec.size();
  detail::require_domain(n >= 2, "indicator function needs at least two eigenvalues");
  detail::require_domain(spec.steps >= 1, "indicator function needs the sample count T");
  const auto t = static_cast<double>(spec.steps);
  Eigen::VectorXd out(n - 1);
  double tail = 0.0;  // sum of L_{k+1}..L_n, accumulated from the small end
  for (Eigen::Index k = n - 1; k >= 1; --k) {
    tail += spec.values(k);  // L_{k+1} in 1-based terms
    const auto rest = static_cast<double>(n - k);
    out(k - 1) = std::sqrt(tail / (t * rest)) / (rest * rest);
  }
  return out;
}

/// 1-based k of the smallest indicator value; ties go to the smallest k.
inline int argmin_indicator(const Eigen::VectorXd& indicator) {
  detail::require_domain(indicator.size() >= 1, "empty indicator function");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < indicator.size(); ++i) {
    if (indicator(i) < indicator(best)) best = i;
  }
  return static_cast<int>(best + 1);
}

struct DimensionalityReport {
  int k_min = 0;
  EigenSpectrum spectrum;
  Eigen::VectorXd indicator;
  // max / median of the per-node residual variance left after removing the
  // first k_min components. The indicator assumes one noise level for every
  // node; a large spread is flagged.
  double residual_spread = 1.0;
  bool heteroscedastic = false;
};

inline constexpr double kHeteroscedasticSpread = 4.0;

inline DimensionalityReport analyze_dimensionality(const Eigen::MatrixXd& m, bool center = true) {
  detail::require_domain(m.rows() >= 2 && m.cols() >= 2, "dimensionality needs T >= 2 and n >= 2");
  if (!m.allFinite()) throw NumericError("state-collect matrix has non-finite entries");
  const Eigen::MatrixXd sigma = covariance(m, center);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sigma);
  if (solver.info() != Eigen::Success) throw NumericError("eigen decomposition did not converge");

  DimensionalityReport rep;
  rep.spectrum = {detail::descending_clamped(solver.eigenvalues()), m.rows()};
  rep.indicator = indicator_function(rep.spectrum);
  rep.k_min = argmin_indicator(rep.indicator);

  // Residual per-node variance: diagonal of sigma minus the retained part.
  const Eigen::Index n = m.cols();
  const Eigen::MatrixXd& vecs = solver.eigenvectors();  // ascending order
  Eigen::VectorXd residual = sigma.diagonal();
  for (int k = 0; k < rep.k_min; ++k) {
    const Eigen::Index col = n - 1 - k;
    residual -= rep.spectrum.values(k) * vecs.col(col).cwiseAbs2();
  }
  residual = residual.cwiseMax(0.0);
  std::vector<double> sorted(residual.data(), residual.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  const double median = sorted[static_cast<std::size_t>(n / 2)];
  const double peak = residual.maxCoeff();
  rep.residual_spread = median > 0.0 ? peak / median : (peak > 0.0 ? INFINITY : 1.0);
  rep.heteroscedastic = rep.residual_spread > kHeteroscedasticSpread;
  return rep;
}

inline int dimensionality(const Eigen::MatrixXd& m) { return analyze_dimensionality(m).k_min; }
inline int dimensionality(const StateCollectMatrix& m) { return dimensionality(m.values); }

/// Dimensionality with the laser switched off: the same inputs, fibre, node
/// sampling and detector noise, but the cavity replaced by an incoherent
/// pass-through that is linear in the input.
inline DimensionalityReport dimensionality_off(const Simulator& sim, const LabeledSequence& seq, NoiseStream& noise) {
  const Simulator off = sim.with_response(ResponseModel::passive);
  return analyze_dimensionality(off.respond(seq, noise).values);
}

// ---------------------------------------------------------------------------
// Superposition probe

struct NonlinearityProbe {
  Eigen::VectorXd deviation;  // per site
  double score = 0.0;         // mean deviation / mean response to 111
};

/// |x(001) + x(010) + x(100) - x(111) - 2 x(000)| per site, noiseless. The
/// 2 x(000) term removes the ring and free-running background that the three
/// single-bit responses count once too often.
inline NonlinearityProbe nonlinearity_probe(const Simulator& sim) {
  constexpr int kBits = 3;
  const SimulatorConfig& cfg = sim.config();
  auto response = [&](int cls) {
    return sim.site_intensities(make_header_pattern(cfg.grid, kBits, cls, cfg.ring_fraction));
  };
  const Eigen::VectorXd x000 = response(0);
  const Eigen::VectorXd x111 = response(7);
  const Eigen::VectorXd summed = response(1) + response(2) + response(4);
  NonlinearityProbe out;
  out.deviation = (summed - x111 - 2.0 * x000).cwiseAbs();
  const double ref = x111.mean();
  out.score = ref > 0.0 ? out.deviation.mean() / ref : 0.0;
  return out;
}

}  // namespace lavcsel
