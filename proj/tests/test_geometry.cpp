// Copyright 2026 The scoreprobe Authors
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
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scoreprobe/errors.hpp"
#include "scoreprobe/geometry.hpp"
#include "scoreprobe/random.hpp"

using namespace scoreprobe;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Normalize, PythagoreanTriple) {
  const UnitFeature u = normalize(vec({3, 4}));
  EXPECT_NEAR(u[0], 0.6, 1e-15);
  EXPECT_NEAR(u[1], 0.8, 1e-15);
}

TEST(Normalize, ZeroVectorThrows) {
  EXPECT_THROW(normalize(vec({0, 0})), DegenerateInputError);
}

TEST(Normalize, Idempotent) {
  RandomStream rng(7);
  for (int t = 0; t < 100; ++t) {
    const UnitFeature u = normalize(rng.gaussian_vector(16));
    const UnitFeature v = normalize(u.coords());
    EXPECT_LE((u.coords() - v.coords()).norm(), 1e-12);
  }
}

TEST(UnitFeature, RejectsNonUnitAndTinyDimension) {
  EXPECT_THROW(UnitFeature(vec({1, 1})), DegenerateInputError);
  EXPECT_THROW(UnitFeature(vec({1})), DimensionMismatchError);
  EXPECT_NO_THROW(UnitFeature(vec({1, 0})));
}

TEST(Cosine, BasisCases) {
  const UnitFeature e1(vec({1, 0})), e2(vec({0, 1})), u(vec({0.6, 0.8}));
  EXPECT_DOUBLE_EQ(cosine(e1, e1).value(), 1.0);
  EXPECT_DOUBLE_EQ(cosine(e1, e2).value(), 0.0);
  EXPECT_NEAR(cosine(u, e1).value(), 0.6, 1e-15);
}

TEST(Cosine, DimensionMismatch) {
  EXPECT_THROW(cosine(UnitFeature(vec({1, 0})), UnitFeature(vec({1, 0, 0}))),
               DimensionMismatchError);
}

TEST(Waveform, RangeChecks) {
  EXPECT_THROW(Waveform(vec({0.5, 1.5})), std::invalid_argument);
  const Waveform w = Waveform::clipped(vec({2, -3, 0.25}));
  EXPECT_EQ(w.samples(), vec({1, -1, 0.25}));
}

TEST(SimilarityScore, Range) {
  EXPECT_THROW(SimilarityScore(1.1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(SimilarityScore(1.0 + 1e-15).value(), 1.0);
  EXPECT_LT(SimilarityScore(0.2), SimilarityScore(0.3));
}

TEST(PerturbAngular, ExactAngles) {
  RandomStream rng(11);
  const UnitFeature x = normalize(rng.gaussian_vector(32));
  EXPECT_LE((perturb_angular(x, 0.0, rng).coords() - x.coords()).norm(), 1e-12);
  EXPECT_NEAR(cosine(x, perturb_angular(x, 90.0, rng)).value(), 0.0, 1e-12);
  EXPECT_NEAR(cosine(x, perturb_angular(x, 30.0, rng)).value(),
              std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(PerturbAngular, PropertyOverAngles) {
  RandomStream rng(12);
  for (int t = 0; t < 500; ++t) {
    const UnitFeature x = normalize(rng.gaussian_vector(2 + t % 30));
    const double theta = rng.uniform(0.0, 180.0);
    const double c = cosine(x, perturb_angular(x, theta, rng)).value();
    EXPECT_LE(std::abs(c - std::cos(theta * std::numbers::pi / 180.0)), 1e-9);
  }
}

TEST(PerturbAngular, RejectsOutOfRange) {
  RandomStream rng(1);
  const UnitFeature x(vec({1, 0}));
  EXPECT_THROW(perturb_angular(x, -1.0, rng), std::invalid_argument);
  EXPECT_THROW(perturb_angular(x, 181.0, rng), std::invalid_argument);
}

TEST(LeastSquares, IdentitySystem) {
  const auto r = least_squares(Matrix::Identity(3, 3), vec({1, 2, 3}));
  EXPECT_LE((r.solution - vec({1, 2, 3})).norm(), 1e-15);
  EXPECT_NEAR(r.residual, 0.0, 1e-15);
}

TEST(LeastSquares, InconsistentRow) {
  Matrix a(3, 2);
  a << 1, 0, 0, 1, 0, 0;
  const auto r = least_squares(a, vec({1, 2, 5}));
  EXPECT_LE((r.solution - vec({1, 2})).norm(), 1e-14);
  EXPECT_NEAR(r.residual, 5.0, 1e-14);
}

TEST(LeastSquares, PlantedSolution) {
  RandomStream rng(3);
  const Matrix a = rng.gaussian_matrix(20, 8);
  const Vector x = rng.gaussian_vector(8);
  const Vector y = a * x;
  const auto r = least_squares(a, y);
  EXPECT_LE((r.solution - x).norm(), 1e-9);
  EXPECT_LE(r.residual, 1e-9 * y.norm());
}

TEST(LeastSquares, Errors) {
  EXPECT_THROW(least_squares(Matrix::Zero(3, 2), vec({1, 2, 3})),
               DegenerateInputError);
  EXPECT_THROW(least_squares(Matrix::Identity(3, 3), vec({1, 2})),
               DimensionMismatchError);
}

TEST(ConditionNumber, KnownCases) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  d(1, 1) = 1;
  EXPECT_NEAR(condition_number(d), 2.0, 1e-14);
  RandomStream rng(5);
  const Eigen::HouseholderQR<Matrix> qr(rng.gaussian_matrix(6, 6));
  const Matrix q = qr.householderQ();
  EXPECT_NEAR(condition_number(q.topRows(4)), 1.0, 1e-12);
  EXPECT_THROW(condition_number(Matrix::Zero(3, 3)), DegenerateInputError);
}

TEST(ConditionNumber, MatchesJacobiOracle) {
  RandomStream rng(9);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = rng.gaussian_matrix(10, 5);
    const auto s = oracle::singular_values(a);
    EXPECT_NEAR(condition_number(a), s.front() / s.back(), 1e-9);
    const Vector sv = singular_values(a);
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(sv[i], s[i], 1e-10);
  }
}

TEST(LeastSquares, PerturbationBound) {
  RandomStream rng(21);
  for (int t = 0; t < 1000; ++t) {
    const Matrix a = rng.gaussian_matrix(12, 6);
    const Vector y = a * rng.gaussian_vector(6);
    const Vector e = 1e-3 * rng.gaussian_vector(12);
    const Vector x = least_squares(a, y).solution;
    const Vector xp = least_squares(a, y + e).solution;
    EXPECT_LE((xp - x).norm() / x.norm(),
              condition_number(a) * e.norm() / y.norm() * (1 + 1e-9));
  }
}

TEST(DeriveSeed, DistinctTagsDistinctSeeds) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
}
