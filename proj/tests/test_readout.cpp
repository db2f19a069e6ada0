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

#include <vector>

#include <gtest/gtest.h>

#include "lavcsel/readout.hpp"

using namespace lavcsel;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) x(i++) = d;
  return x;
}

Eigen::MatrixXd sample_matrix() {
  Eigen::MatrixXd m(3, 4);
  m << 1, 2, 3, 4,
       5, 6, 7, 8,
       9, 10, 11, 12;
  return m;
}

}  // namespace

TEST(Detect, AllZeroMask) {
  EXPECT_EQ(detect(sample_matrix(), BooleanMask::zeros(4)), Eigen::VectorXd::Zero(3));
}

TEST(Detect, AllOnesMaskIsRowSum) {
  const Eigen::MatrixXd m = sample_matrix();
  EXPECT_EQ(detect(m, BooleanMask::ones(4)), Eigen::VectorXd(m.rowwise().sum()));
}

TEST(Detect, UnitMaskIsColumn) {
  const Eigen::MatrixXd m = sample_matrix();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(detect(m, BooleanMask::unit(4, i)), Eigen::VectorXd(m.col(static_cast<Eigen::Index>(i))));
  }
}

TEST(Detect, LengthMismatchThrows) {
  EXPECT_THROW(detect(sample_matrix(), BooleanMask::ones(3)), DimensionError);
}

TEST(Normalize, Examples) {
  EXPECT_EQ(normalize_trace(vec({2, 4})).values, vec({0, 1}));
  EXPECT_EQ(normalize_trace(vec({5, 5, 5})).values, vec({0.5, 0.5, 0.5}));
  EXPECT_EQ(normalize_trace(vec({1, 2, 3})).values, vec({0, 0.5, 1}));
  EXPECT_THROW(normalize_trace(Eigen::VectorXd()), DomainError);
}

TEST(Normalize, StoredMapReappliesToNewData) {
  const OutputTrace t = normalize_trace(vec({1, 3}));
  EXPECT_EQ(t.normalization.apply(vec({2, 5})), vec({0.5, 2.0}));
  const OutputTrace flat = normalize_trace(vec({4, 4}));
  EXPECT_EQ(flat.normalization.apply(vec({1, 9})), vec({0.5, 0.5}));
}

TEST(Nmse, Examples) {
  EXPECT_EQ(nmse(vec({0.3, 0.9}), vec({0.3, 0.9})), 0.0);
  EXPECT_DOUBLE_EQ(nmse(vec({0, 0}), vec({1, 1})), 1.0);
  EXPECT_DOUBLE_EQ(nmse(vec({0.5, 0.5}), vec({0, 1})), 0.25);
  EXPECT_THROW(nmse(vec({1}), vec({1, 2})), DimensionError);
}

TEST(Classify, DominantColumnWins) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(5, 4);
  out.col(2).setConstant(1.0);
  for (int c : classify(out)) EXPECT_EQ(c, 2);
}

TEST(Classify, TieGoesToLowestIndex) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(1, 8);
  out(0, 2) = out(0, 5) = 0.9;
  EXPECT_EQ(classify(out), std::vector<int>{2});
}

TEST(Classify, OneHotGivesZeroSer) {
  const std::vector<int> labels = {0, 3, 1, 2, 3, 0};
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(6, 4);
  for (std::size_t t = 0; t < labels.size(); ++t) out(static_cast<Eigen::Index>(t), labels[t]) = 1.0;
  EXPECT_EQ(ser(classify(out), labels), 0.0);
}

TEST(Ser, Counting) {
  const std::vector<int> labels = {0, 1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(ser(labels, labels), 0.0);
  EXPECT_EQ(ser(std::vector<int>(8, 9), labels), 1.0);
  std::vector<int> p = labels;
  p[0] = 1;
  p[4] = 0;
  p[7] = 2;
  EXPECT_DOUBLE_EQ(ser(p, labels), 0.375);
  EXPECT_THROW(ser({}, {}), DomainError);
}

TEST(Target, OneVsAll) {
  EXPECT_EQ(one_vs_all_target({2, 0, 2, 1}, 2), vec({1, 0, 1, 0}));
}
