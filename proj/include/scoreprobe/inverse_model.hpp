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
#include <string_view>

#include "scoreprobe/geometry.hpp"

namespace scoreprobe {

enum class InverseKind { analytic, trained };

std::string_view to_string(InverseKind kind);
InverseKind inverse_kind_from_string(std::string_view name);

// Affine feature-to-waveform decoder: invert(x) = clip(M x + b + context).
// The context vector is a constant carrier that stands in for fixed
// conditioning (the same "text" for every decode); it is never trained.
class InverseModel {
 public:
  InverseModel(InverseKind kind, Matrix map, Vector offset, Vector context,
               std::uint64_t source_extractor_seed);

  InverseKind kind() const { return kind_; }
  const Matrix& map() const { return map_; }
  const Vector& offset() const { return offset_; }
  const Vector& context() const { return context_; }
  std::uint64_t source_extractor_seed() const { return source_seed_; }
  Eigen::Index feature_dim() const { return map_.cols(); }
  Eigen::Index output_dim() const { return map_.rows(); }

  Waveform invert(const UnitFeature& x) const;
  // M x + b + context before clipping.
  Vector pre_clip(const Vector& x) const;

  void set_parameters(Matrix map, Vector offset);

 private:
  InverseKind kind_;
  Matrix map_;
  Vector offset_;
  Vector context_;
  std::uint64_t source_seed_;
};

}  // namespace scoreprobe
