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

#include "scoreprobe/synthworld.hpp"

#include <cmath>
#include <string>

#include "scoreprobe/errors.hpp"
#include "scoreprobe/inverse_model.hpp"
#include "scoreprobe/random.hpp"

namespace scoreprobe {

namespace {

constexpr std::uint64_t kExtractorTag = 0x65787472;   // "extr"
constexpr std::uint64_t kPopulationTag = 0x706f7075;  // "popu"
constexpr int kMaxRankAttempts = 16;
constexpr double kSignaturePeak = 0.8;

void normalize_rows(Matrix& w) {
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    const double norm = w.row(r).norm();
    if (!(norm > 0.0))
      throw DegenerateInputError("extractor weight row " + std::to_string(r) +
                                 " is zero");
    w.row(r) /= norm;
  }
}

bool full_row_rank(const Matrix& w) {
  const Vector s = singular_values(w);
  return s.size() == w.rows() && s[s.size() - 1] > kSvdRelativeCutoff * s[0];
}

}  // namespace

std::string_view to_string(Nonlinearity kind) {
  return kind == Nonlinearity::linear ? "linear" : "saturating";
}

Nonlinearity nonlinearity_from_string(std::string_view name) {
  if (name == "linear") return Nonlinearity::linear;
  if (name == "saturating") return Nonlinearity::saturating;
  throw std::invalid_argument("unknown nonlinearity '" + std::string(name) +
                              "'");
}

FeatureExtractor FeatureExtractor::from_descriptor(
    const ExtractorDescriptor& desc) {
  FeatureExtractor base = make_extractor(desc.seed, desc.n, desc.d, desc.kind);
  if (!desc.correlation) return base;
  return make_correlated_extractor(base, *desc.correlation);
}

Vector FeatureExtractor::activation(const Vector& samples) const {
  if (samples.size() != input_dim())
    throw DimensionMismatchError("extractor expects " +
                                 std::to_string(input_dim()) +
                                 " samples, got " +
                                 std::to_string(samples.size()));
  if (kind() == Nonlinearity::linear) return weight_ * samples;
  return weight_ * samples.array().tanh().matrix();
}

UnitFeature FeatureExtractor::extract(const Waveform& w) const {
  return normalize(activation(w.samples()));
}

FeatureExtractor make_extractor(std::uint64_t seed, Eigen::Index n,
                                Eigen::Index d, Nonlinearity kind) {
  if (d < 2 || d > n)
    throw DimensionMismatchError("extractor needs 2 <= d <= n (d=" +
                                 std::to_string(d) +
                                 ", n=" + std::to_string(n) + ")");
  for (int attempt = 0; attempt < kMaxRankAttempts; ++attempt) {
    RandomStream rng(derive_seed(seed, {kExtractorTag,
                                        static_cast<std::uint64_t>(attempt)}));
    Matrix w = rng.gaussian_matrix(d, n);
    normalize_rows(w);
    if (full_row_rank(w))
      return FeatureExtractor(ExtractorDescriptor{seed, n, d, kind, {}},
                              std::move(w));
  }
  throw DegenerateInputError("could not draw a full-rank extractor");
}

FeatureExtractor make_correlated_extractor(const FeatureExtractor& base,
                                           CorrelationSpec spec) {
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0))
    throw std::invalid_argument("correlation rho must lie in [0, 1]");
  if (base.descriptor().correlation)
    throw UnsupportedError("correlated extractors cannot be chained");
  ExtractorDescriptor desc = base.descriptor();
  desc.correlation = spec;
  if (spec.rho == 1.0) return FeatureExtractor(desc, base.weight());

  const FeatureExtractor fresh =
      make_extractor(spec.seed, base.input_dim(), base.feature_dim(),
                     base.kind());
  Matrix w = spec.rho * base.weight() + (1.0 - spec.rho) * fresh.weight();
  normalize_rows(w);
  if (!full_row_rank(w))
    throw DegenerateInputError("blended extractor lost full row rank");
  return FeatureExtractor(desc, std::move(w));
}

Population Population::subset_by_identity(int first, int last) const {
  Population out;
  out.within_spread = within_spread;
  out.seed = seed;
  out.per_identity = per_identity;
  out.identities = 0;
  for (int id = first; id < last && id < identities; ++id) {
    out.identity_centers.push_back(identity_centers[id]);
    ++out.identities;
  }
  for (std::size_t i = 0; i < waveforms.size(); ++i) {
    if (identity_labels[i] >= first && identity_labels[i] < last) {
      out.waveforms.push_back(waveforms[i]);
      out.identity_labels.push_back(identity_labels[i]);
    }
  }
  return out;
}

Population make_population(std::uint64_t seed, int identities,
                           int per_identity, double within_spread,
                           Eigen::Index n) {
  if (identities < 2 || per_identity < 2)
    throw std::invalid_argument(
        "population needs >= 2 identities and >= 2 utterances each");
  if (!(within_spread >= 0.0))
    throw std::invalid_argument("within_spread must be non-negative");
  if (n < 1) throw DimensionMismatchError("waveform length must be positive");

  RandomStream rng(derive_seed(seed, {kPopulationTag}));
  std::vector<Vector> signatures;
  signatures.reserve(identities);
  for (int id = 0; id < identities; ++id) {
    Vector sig(n);
    for (Eigen::Index i = 0; i < n; ++i) sig[i] = rng.uniform(-1.0, 1.0);
    sig *= kSignaturePeak / sig.cwiseAbs().maxCoeff();
    signatures.push_back(std::move(sig));
  }

  Population pop;
  pop.within_spread = within_spread;
  pop.seed = seed;
  pop.identities = identities;
  pop.per_identity = per_identity;
  pop.waveforms.reserve(static_cast<std::size_t>(identities) * per_identity);
  for (int id = 0; id < identities; ++id) {
    pop.identity_centers.push_back(normalize(signatures[id]));
    for (int u = 0; u < per_identity; ++u) {
      Vector noise = rng.gaussian_vector(n);
      pop.waveforms.push_back(
          Waveform::clipped(signatures[id] + within_spread * noise));
      pop.identity_labels.push_back(id);
    }
  }
  return pop;
}

InverseModel analytic_inverse(const FeatureExtractor& extractor) {
  if (extractor.kind() != Nonlinearity::linear)
    throw UnsupportedError(
        "analytic inverse exists only for linear extractors; train one "
        "instead");
  const Matrix& w = extractor.weight();
  Eigen::JacobiSVD<Matrix> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const Matrix pinv = svd.matrixV() * s.cwiseInverse().asDiagonal() *
                      svd.matrixU().transpose();
  const double scale = 1.0 / pinv.rowwise().norm().maxCoeff();
  const Eigen::Index n = extractor.input_dim();
  return InverseModel(InverseKind::analytic, scale * pinv, Vector::Zero(n),
                      Vector::Zero(n), extractor.seed());
}

}  // namespace scoreprobe
