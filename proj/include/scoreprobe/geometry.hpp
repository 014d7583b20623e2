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

#pragma once

#include <compare>

#include <Eigen/Dense>

#include "scoreprobe/random.hpp"

namespace scoreprobe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kUnitNormTolerance = 1e-9;
// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kSvdRelativeCutoff = 1e-12;

// A point on the unit hypersphere S^{d-1}, d >= 2.
class UnitFeature {
 public:
  // Throws DegenerateInputError unless |norm - 1| <= kUnitNormTolerance.
  explicit UnitFeature(Vector coords);

  const Vector& coords() const { return coords_; }
  Eigen::Index dim() const { return coords_.size(); }
  double operator[](Eigen::Index i) const { return coords_[i]; }

  UnitFeature operator-() const;

 private:
  Vector coords_;
};

// Real samples in [-1, 1]. Construction rejects anything outside the box;
// use clipped() to project.
class Waveform {
 public:
  explicit Waveform(Vector samples);
  static Waveform clipped(const Vector& raw);

  const Vector& samples() const { return samples_; }
  Eigen::Index size() const { return samples_.size(); }

  bool operator==(const Waveform& other) const {
    return samples_ == other.samples_;
  }

 private:
  Vector samples_;
};

// A cosine similarity in [-1, 1].
class SimilarityScore {
 public:
  explicit SimilarityScore(double value);
  double value() const { return value_; }
  auto operator<=>(const SimilarityScore&) const = default;

 private:
  double value_;
};

UnitFeature normalize(const Vector& v);

SimilarityScore cosine(const UnitFeature& u, const UnitFeature& v);

// Rotates x by exactly theta degrees towards a uniformly random direction
// orthogonal to x.
UnitFeature perturb_angular(const UnitFeature& x, double theta_degrees,
                            RandomStream& rng);

struct LeastSquaresResult {
  Vector solution;
  double residual = 0.0;
};

// Minimum-norm least-squares solution via truncated SVD.
LeastSquaresResult least_squares(const Matrix& a, const Vector& y);

// sigma_max / sigma_min over the singular values that survive truncation.
double condition_number(const Matrix& a);

Vector singular_values(const Matrix& a);

}  // namespace scoreprobe
