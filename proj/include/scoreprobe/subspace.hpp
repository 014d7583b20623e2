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
#include <span>
#include <vector>

#include "scoreprobe/geometry.hpp"
#include "scoreprobe/inverse_model.hpp"
#include "scoreprobe/oracle.hpp"
#include "scoreprobe/random.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

struct OrthogonalSet {
  std::vector<Waveform> members;
  Matrix features;                   // m x d, row i = F_L(members[i])
  std::vector<std::size_t> indices;  // positions in the source pool
  double delta = 0.0;
  std::uint64_t order_seed = 0;
  double certified_max_abs_cos = 0.0;

  std::size_t m() const { return members.size(); }
};

// max_{i != j} |<row_i, row_j>|; 0 for fewer than two rows.
double max_abs_offdiag_cosine(const Matrix& rows);

// Greedy pass over the pool in a seeded random order, admitting a waveform
// iff |cos| <= delta against every admitted feature. Throws
// InfeasibleDeltaError if the pool runs out before m members.
OrthogonalSet build_delta_obs(std::span<const Waveform> pool,
                              const FeatureExtractor& extractor, double delta,
                              std::size_t m, std::uint64_t order_seed);
OrthogonalSet build_delta_obs(const Population& pool,
                              const FeatureExtractor& extractor, double delta,
                              std::size_t m);

// `count` unit rows in R^d whose pairwise |cos| is pushed below `coherence`
// by iterative repulsion. Returns the best frame found within max_iter.
Matrix low_coherence_frame(Eigen::Index d, std::size_t count,
                           double coherence, std::uint64_t seed,
                           int max_iter = 5000);

// Probe waveforms: a low-coherence frame decoded through the attacker's
// inverse model.
std::vector<Waveform> probe_corpus(const InverseModel& model, std::size_t count,
                                   double coherence, std::uint64_t seed);

struct RecoveryResult {
  Vector raw;
  UnitFeature recovered;
  std::vector<double> scores;
  double residual = 0.0;
  double cond = 0.0;
  std::uint64_t queries_used = 0;
};

struct SpOutcome {
  RecoveryResult recovery;
  Waveform attack;
};

// Exactly obs.m() queries, issued in member order.
SpOutcome sp_attack(VerificationOracle& oracle, const FeatureExtractor& local,
                    const InverseModel& model, const OrthogonalSet& obs);

// Template estimate from already collected scores; no oracle involved.
RecoveryResult recover_template(const Matrix& a, const Vector& scores);

// (|x' - x| / |x|) / (cond(A) * |eps| / |y|) for x = A^+ y, x' = A^+ (y + eps).
double recovery_error_ratio(const Matrix& a, const Vector& y,
                            const Vector& eps);

struct ErrorCheckResult {
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

// Random perturbations with |eps| = noise_level * |y|. A must have full
// column rank and y must lie in its range.
ErrorCheckResult recovery_error_check(const Matrix& a, const Vector& y,
                                      double noise_level, int trials,
                                      RandomStream& rng);

}  // namespace scoreprobe
