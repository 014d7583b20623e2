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
#include <utility>
#include <vector>

#include "scoreprobe/geometry.hpp"
#include "scoreprobe/inverse_model.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

struct TrainConfig {
  double lambda_ic = 5.0;
  double lambda_sc = 1.0;
  int batch_size = 64;
  int steps = 1500;
  double lr_initial = 1e-2;
  double lr_final = 1e-4;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

double loss_ic(const FeatureExtractor& extractor, const InverseModel& model,
               std::span<const Waveform> batch);
double loss_sc(const FeatureExtractor& extractor, const InverseModel& model,
               std::span<const Waveform> batch);
double loss_total(const FeatureExtractor& extractor, const InverseModel& model,
                  std::span<const Waveform> batch, const TrainConfig& config);

struct LossGradient {
  double total = 0.0;
  double ic = 0.0;
  double sc = 0.0;
  Matrix d_map;     // n x d
  Vector d_offset;  // n
};

// Analytic gradient of lambda_ic * L_IC + lambda_sc * L_SC with respect to
// the map and offset. Clip has derivative 1 strictly inside (-1, 1) and 0
// elsewhere; sign(0) = 0 for the absolute values of L_SC.
LossGradient loss_gradient(const FeatureExtractor& extractor,
                           const InverseModel& model,
                           std::span<const Waveform> batch, double lambda_ic,
                           double lambda_sc);

// Small random map, zero offset, fixed random context.
InverseModel initial_trained_model(const FeatureExtractor& extractor,
                                   std::uint64_t seed);

struct TrainResult {
  InverseModel model;
  std::vector<double> loss_history;
};

// Adam on (M, b); the context stays fixed. Throws TrainingDivergedError on a
// non-finite loss.
TrainResult train_inverse(const FeatureExtractor& extractor,
                          const Population& pool, const TrainConfig& config);
TrainResult train_inverse(const FeatureExtractor& extractor,
                          const Population& pool, const TrainConfig& config,
                          InverseModel start);

// Identities [0, 0.8 * identities) train, the rest are held out.
std::pair<Population, Population> split_by_identity(const Population& pool,
                                                    double train_fraction = 0.8);

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

SummaryStats summarize(std::span<const double> values);

struct RoundTripReport {
  std::vector<double> local_scores;     // s_L under the conditioning extractor
  std::vector<double> transfer_scores;  // s_T under the evaluation extractor
  std::vector<double> positive_ref;
  std::vector<double> negative_ref;
  SummaryStats local;
  SummaryStats transfer;
  SummaryStats positive;
  SummaryStats negative;
};

// Every utterance is extracted with cond_extractor, inverted, and the result
// compared with the original under both extractors. References use all
// same-identity pairs and an equal number of sampled different-identity
// pairs, both under eval_extractor.
RoundTripReport round_trip_report(const FeatureExtractor& eval_extractor,
                                  const FeatureExtractor& cond_extractor,
                                  const InverseModel& model,
                                  const Population& pool,
                                  std::uint64_t reference_seed = 0);

double round_trip_score(const FeatureExtractor& eval_extractor,
                        const FeatureExtractor& cond_extractor,
                        const InverseModel& model, const Waveform& w);

struct AngularRow {
  double angle_degrees = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

std::vector<AngularRow> angular_robustness(const FeatureExtractor& extractor,
                                           const InverseModel& model,
                                           const Population& pool,
                                           std::span<const double> angles,
                                           std::uint64_t seed = 0);

}  // namespace scoreprobe
