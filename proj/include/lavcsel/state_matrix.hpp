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

#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace lavcsel {

/// T x n matrix of node responses: row t holds every node's intensity for
/// input t, column i is the trace of node i over the sequence.
struct StateCollectMatrix {
  Eigen::MatrixXd values;
  std::uint64_t sequence_seed = 0;
  std::uint64_t params_hash = 0;

  Eigen::Index steps() const noexcept { return values.rows(); }
  Eigen::Index nodes() const noexcept { return values.cols(); }
};

}  // namespace lavcsel
