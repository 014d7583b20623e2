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
#include <span>
#include <string>
#include <vector>

#include "scoreprobe/geometry.hpp"
#include "scoreprobe/inverse_model.hpp"
#include "scoreprobe/oracle.hpp"
#include "scoreprobe/random.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

struct NesConfig {
  int samples_per_draw = 50;  // B
  double sigma = 1e-3;
  double lr_initial = 0.1;
  double lr_min = 1e-4;
  double momentum = 0.9;
  int max_iter = 1000;
  int candidate_pool = 100;  // C
  int selected = 1;          // S
  std::optional<int> early_stop_window;
  std::optional<std::uint64_t> query_budget;
  bool antithetic = false;

  // Throws ConfigError.
  void validate() const;

  // Full-scale settings: 48k-sample waveforms, 512-dim latents.
  static NesConfig audio_table();
  static NesConfig latent_table();
  // Step and noise sizes re-chosen for the 256-sample / 32-dim synthetic
  // world; everything else as in the full-scale settings.
  static NesConfig audio_synthetic();
  static NesConfig latent_synthetic();

  bool operator==(const NesConfig&) const = default;
};

struct StepRecord {
  int iteration = 0;
  std::uint64_t queries = 0;  // cumulative
  double best_score = -1.0;
};

struct AttackTrace {
  std::vector<StepRecord> steps;  // entry 0 is the initialization
  std::uint64_t total_queries = 0;
  bool success = false;
  std::optional<std::uint64_t> queries_at_success;
  int iterations = 0;
  double best_score = -1.0;
  Waveform best_waveform{Vector()};
  std::optional<UnitFeature> best_latent;
  std::string stop_reason;
};

// (1 / (B sigma)) sum_i losses[i] * perturbations[i].
Vector nes_gradient(std::span<const double> losses,
                    std::span<const Vector> perturbations, double sigma);

AttackTrace audio_nes(VerificationOracle& oracle, double tau,
                      const NesConfig& config, RandomStream& rng);

AttackTrace latent_nes(VerificationOracle& oracle, const InverseModel& model,
                       double tau, const NesConfig& config, RandomStream& rng);

struct GdConfig {
  double learning_rate = 20.0;
  int max_iter = 2000;
  double tolerance = 1e-10;  // stop once |loss change| <= tolerance
};

struct GdResult {
  Waveform waveform;
  std::vector<double> loss_history;
};

// White-box descent on 1 - cos(F(w), target) from `start`, clipping to the
// valid waveform range after every step.
GdResult audio_gd(const FeatureExtractor& extractor, const UnitFeature& target,
                  const Waveform& start, const GdConfig& config);

// Gradient of 1 - cos(F(w), target) with respect to the samples of w.
Vector cosine_loss_gradient(const FeatureExtractor& extractor,
                            const UnitFeature& target, const Vector& samples);

}  // namespace scoreprobe
