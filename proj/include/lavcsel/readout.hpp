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

// Boolean output layer: mirror mask, detector sum, batch normalisation,
// error measures and the one-vs-all symbol decision.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lavcsel/encoder.hpp"
#include "lavcsel/error.hpp"
#include "lavcsel/state_matrix.hpp"

namespace lavcsel {

/// Readout mirror configuration: bit i routes node i to the detector.
struct BooleanMask {
  Bits bits;

  BooleanMask() = default;
  explicit BooleanMask(Bits b) : bits(std::move(b)) {}

  static BooleanMask zeros(std::size_t n) { return BooleanMask(Bits(n, 0)); }
  static BooleanMask ones(std::size_t n) { return BooleanMask(Bits(n, 1)); }
  static BooleanMask unit(std::size_t n, std::size_t i) {
    Bits b(n, 0);
    b.at(i) = 1;
    return BooleanMask(std::move(b));
  }

  std::size_t size() const noexcept { return bits.size(); }
  bool operator==(const BooleanMask&) const = default;
};

/// Detector power: raw[t] = sum_i mask_i * M[t, i].
inline Eigen::VectorXd detect(const Eigen::MatrixXd& m, const BooleanMask& mask) {
  detail::require_dims(static_cast<Eigen::Index>(mask.size()) == m.cols(),
                       "mask length " + std::to_string(mask.size()) + " != node count " + std::to_string(m.cols()));
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(m.rows());
  for (Eigen::Index i = 0; i < m.cols(); ++i) {
    if (mask.bits[static_cast<std::size_t>(i)]) raw += m.col(i);
  }
  return raw;
}

inline Eigen::VectorXd detect(const StateCollectMatrix& m, const BooleanMask& mask) { return detect(m.values, mask); }

/// Affine map fixed on a training batch: y = (raw - lo) / span, or 0.5
/// everywhere when the batch was constant (span == 0).
struct Normalization {
  double lo = 0.0;
  double span = 1.0;

  double apply(double raw) const { return span > 0.0 ? (raw - lo) / span : 0.5; }

  Eigen::VectorXd apply(const Eigen::VectorXd& raw) const {
    if (span > 0.0) return (raw.array() - lo) / span;
    return Eigen::VectorXd::Constant(raw.size(), 0.5);
  }
};

struct OutputTrace {
  Eigen::VectorXd values;
  Normalization normalization;
};

inline OutputTrace normalize_trace(const Eigen::VectorXd& raw) {
  detail::require_domain(raw.size() >= 1, "cannot normalise an empty trace");
  OutputTrace out;
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  out.normalization = {lo, hi - lo};
  out.values = out.normalization.apply(raw);
  return out;
}

/// Batch mean squared error between an output trace and its target.
inline double nmse(const Eigen::VectorXd& y, const Eigen::VectorXd& target) {
  detail::require_dims(y.size() == target.size(), "nmse: length mismatch");
  detail::require_domain(y.size() >= 1, "nmse: empty trace");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double d = y(t) - target(t);
    acc += d * d;
  }
  return acc / static_cast<double>(y.size());
}

/// Column of the largest output per row; ties go to the lowest class index.
inline std::vector<int> classify(const Eigen::MatrixXd& per_class_outputs) {
  detail::require_domain(per_class_outputs.cols() >= 2, "classify needs at least two classes");
  std::vector<int> labels(static_cast<std::size_t>(per_class_outputs.rows()));
  for (Eigen::Index t = 0; t < per_class_outputs.rows(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < per_class_outputs.cols(); ++c) {
      if (per_class_outputs(t, c) > per_class_outputs(t, best)) best = c;
    }
    labels[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return labels;
}

inline double ser(const std::vector<int>& predicted, const std::vector<int>& labels) {
  detail::require_dims(predicted.size() == labels.size(), "ser: length mismatch");
  detail::require_domain(!labels.empty(), "ser: empty label vector");
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < labels.size(); ++t) wrong += predicted[t] != labels[t];
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

/// One-vs-all target: 1 where the label equals `cls`, 0 elsewhere.
inline Eigen::VectorXd one_vs_all_target(const std::vector<int>& labels, int cls) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t t = 0; t < labels.size(); ++t) y(static_cast<Eigen::Index>(t)) = labels[t] == cls ? 1.0 : 0.0;
  return y;
}

}  // namespace lavcsel
