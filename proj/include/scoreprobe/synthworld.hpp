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

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "scoreprobe/geometry.hpp"

namespace scoreprobe {

enum class Nonlinearity { linear, saturating };

std::string_view to_string(Nonlinearity kind);
Nonlinearity nonlinearity_from_string(std::string_view name);

struct CorrelationSpec {
  double rho = 1.0;
  std::uint64_t seed = 0;
};

// Everything needed to regenerate an extractor; weights are never stored.
struct ExtractorDescriptor {
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  Nonlinearity kind = Nonlinearity::linear;
  std::optional<CorrelationSpec> correlation;

  bool operator==(const ExtractorDescriptor&) const = default;
};

// F(w) = normalize(W * phi(w)), phi = identity or elementwise tanh. Rows of W
// are unit-norm and W has full row rank. Immutable after construction.
class FeatureExtractor {
 public:
  static FeatureExtractor from_descriptor(const ExtractorDescriptor& desc);

  const Matrix& weight() const { return weight_; }
  Nonlinearity kind() const { return desc_.kind; }
  std::uint64_t seed() const { return desc_.seed; }
  const ExtractorDescriptor& descriptor() const { return desc_; }
  Eigen::Index input_dim() const { return weight_.cols(); }
  Eigen::Index feature_dim() const { return weight_.rows(); }

  UnitFeature extract(const Waveform& w) const;
  // W * phi(w) before normalization.
  Vector activation(const Vector& samples) const;

 private:
  FeatureExtractor(ExtractorDescriptor desc, Matrix weight)
      : desc_(std::move(desc)), weight_(std::move(weight)) {}

  friend FeatureExtractor make_extractor(std::uint64_t, Eigen::Index,
                                         Eigen::Index, Nonlinearity);
  friend FeatureExtractor make_correlated_extractor(const FeatureExtractor&,
                                                    CorrelationSpec);

  ExtractorDescriptor desc_;
  Matrix weight_;
};

FeatureExtractor make_extractor(std::uint64_t seed, Eigen::Index n,
                                Eigen::Index d, Nonlinearity kind);

// weight = normalize_rows(rho * W_base + (1 - rho) * W_fresh), where W_fresh
// comes from make_extractor(spec.seed, ...). rho = 1 returns the base weights
// untouched.
FeatureExtractor make_correlated_extractor(const FeatureExtractor& base,
                                           CorrelationSpec spec);

struct Population {
  std::vector<Waveform> waveforms;
  std::vector<int> identity_labels;
  std::vector<UnitFeature> identity_centers;
  double within_spread = 0.0;
  std::uint64_t seed = 0;
  int identities = 0;
  int per_identity = 0;

  std::size_t size() const { return waveforms.size(); }
  // The utterances whose identity label lies in [first, last).
  Population subset_by_identity(int first, int last) const;
};

// Utterance = clip(signature(identity) + within_spread * N(0, I)); signatures
// are uniform on the amplitude box, rescaled to 0.8 peak amplitude.
Population make_population(std::uint64_t seed, int identities,
                           int per_identity, double within_spread,
                           Eigen::Index n);

class InverseModel;

// x -> c * pinv(W) * x with c = 1 / max_row_norm(pinv(W)), so no unit input
// ever reaches the clip. Linear extractors only.
InverseModel analytic_inverse(const FeatureExtractor& extractor);

}  // namespace scoreprobe
