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

#include "scoreprobe/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

UnitFeature::UnitFeature(Vector coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2)
    throw DimensionMismatchError("unit feature needs dimension >= 2");
  const double norm = coords_.norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kUnitNormTolerance)
    throw DegenerateInputError("feature is not unit-norm (norm " +
                               std::to_string(norm) + ")");
}

UnitFeature UnitFeature::operator-() const { return UnitFeature(-coords_); }

Waveform::Waveform(Vector samples) : samples_(std::move(samples)) {
  for (Eigen::Index i = 0; i < samples_.size(); ++i) {
    const double s = samples_[i];
    if (!(s >= -1.0 && s <= 1.0))
      throw std::invalid_argument("waveform sample " + std::to_string(i) +
                                  " outside [-1, 1]");
  }
}

Waveform Waveform::clipped(const Vector& raw) {
  if (!raw.allFinite())
    throw DegenerateInputError("cannot clip a non-finite waveform");
  return Waveform(raw.cwiseMax(-1.0).cwiseMin(1.0));
}

SimilarityScore::SimilarityScore(double value) : value_(value) {
  // Inner products of unit vectors can overshoot by a few ulps.
  if (std::abs(value_) > 1.0 && std::abs(value_) <= 1.0 + 1e-12)
    value_ = std::copysign(1.0, value_);
  if (!(value_ >= -1.0 && value_ <= 1.0))
    throw std::invalid_argument("similarity score outside [-1, 1]: " +
                                std::to_string(value));
}

UnitFeature normalize(const Vector& v) {
  const double norm = v.norm();
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw DegenerateInputError("cannot normalize a zero or non-finite vector");
  return UnitFeature(v / norm);
}

SimilarityScore cosine(const UnitFeature& u, const UnitFeature& v) {
  if (u.dim() != v.dim())
    throw DimensionMismatchError("cosine of features with different dimension");
  return SimilarityScore(std::clamp(u.coords().dot(v.coords()), -1.0, 1.0));
}

UnitFeature perturb_angular(const UnitFeature& x, double theta_degrees,
                            RandomStream& rng) {
  if (!(theta_degrees >= 0.0 && theta_degrees <= 180.0))
    throw std::invalid_argument("angle must lie in [0, 180] degrees");
  const Vector& c = x.coords();
  Vector u;
  for (;;) {
    u = rng.gaussian_vector(c.size());
    u -= c.dot(u) * c;
    const double norm = u.norm();
    if (norm > 1e-8) {
      u /= norm;
      break;
    }
  }
  const double theta = theta_degrees * std::numbers::pi / 180.0;
  return normalize(std::cos(theta) * c + std::sin(theta) * u);
}

namespace {

struct TruncatedSvd {
  Eigen::JacobiSVD<Matrix> svd;
  Eigen::Index rank = 0;
};

TruncatedSvd truncated_svd(const Matrix& a) {
  if (a.rows() < 1 || a.cols() < 1)
    throw DimensionMismatchError("matrix must be at least 1x1");
  if (!a.allFinite()) throw DegenerateInputError("matrix has non-finite entries");
  TruncatedSvd out{Eigen::JacobiSVD<Matrix>(
                       a, Eigen::ComputeThinU | Eigen::ComputeThinV),
                   0};
  const Vector& s = out.svd.singularValues();
  if (s.size() == 0 || !(s[0] > 0.0))
    throw DegenerateInputError("matrix has no nonzero singular value");
  const double cutoff = kSvdRelativeCutoff * s[0];
  while (out.rank < s.size() && s[out.rank] > cutoff) ++out.rank;
  return out;
}

}  // namespace

LeastSquaresResult least_squares(const Matrix& a, const Vector& y) {
  if (a.rows() != y.size())
    throw DimensionMismatchError("least_squares: A has " +
                                 std::to_string(a.rows()) + " rows, y has " +
                                 std::to_string(y.size()) + " entries");
  const auto t = truncated_svd(a);
  const auto& u = t.svd.matrixU();
  const auto& v = t.svd.matrixV();
  const Vector& s = t.svd.singularValues();
  Vector coeffs = u.leftCols(t.rank).transpose() * y;
  coeffs.array() /= s.head(t.rank).array();
  LeastSquaresResult out;
  out.solution = v.leftCols(t.rank) * coeffs;
  out.residual = (a * out.solution - y).norm();
  return out;
}

double condition_number(const Matrix& a) {
  const auto t = truncated_svd(a);
  const Vector& s = t.svd.singularValues();
  return s[0] / s[t.rank - 1];
}

Vector singular_values(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues();
}

}  // namespace scoreprobe
