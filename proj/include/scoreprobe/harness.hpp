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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scoreprobe/inverse.hpp"
#include "scoreprobe/metrics.hpp"
#include "scoreprobe/nes.hpp"
#include "scoreprobe/serialization.hpp"
#include "scoreprobe/subspace.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr const char* kMethodAudioNes = "audio-nes";
inline constexpr const char* kMethodLatentNes = "latent-nes";
inline constexpr const char* kMethodAudioGd = "audio-gd";
inline constexpr const char* kMethodSp = "sp";

struct WorldConfig {
  Eigen::Index n = 256;
  Eigen::Index d = 32;
  int identities = 50;
  int per_identity = 10;
  double within_spread = 0.1;
  Nonlinearity kind = Nonlinearity::linear;
};

struct SpConfig {
  double delta = 0.2;
  std::size_t m = 50;
  std::size_t probe_count = 64;
  double probe_coherence = 0.17;
};

struct ExperimentConfig {
  WorldConfig world;
  std::vector<double> rhos{0.5, 0.75, 0.9, 1.0};
  std::vector<std::string> methods{kMethodAudioNes, kMethodLatentNes,
                                   kMethodAudioGd, kMethodSp};
  InverseKind inverse = InverseKind::analytic;
  TrainConfig train;
  NesConfig nes_audio = NesConfig::audio_synthetic();
  NesConfig nes_latent = NesConfig::latent_synthetic();
  SpConfig sp;
  GdConfig gd;
  DcfParams dcf;
  std::uint64_t query_budget = 50000;
  int trials = 10;
  std::uint64_t seed = 1;
  std::string output_dir = "results";

  // Throws ConfigError.
  void validate() const;
};

Json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
// Hash of the resolved config without output_dir.
std::string config_hash(const ExperimentConfig& cfg);

struct World {
  std::shared_ptr<const FeatureExtractor> local;
  std::vector<std::shared_ptr<const FeatureExtractor>> targets;  // per rho
  Population system;    // calibration
  Population victims;   // enrolled identities under attack
  Population attacker;  // the attacker's own recordings
};

World build_world(const ExperimentConfig& cfg);

struct OracleCalibration {
  double rho = 1.0;
  double eer = 0.0;
  double tau_e = 0.0;
  double min_dcf = 0.0;
  double tau_m = 0.0;
  std::size_t genuine_pairs = 0;
  std::size_t impostor_pairs = 0;
};

struct CalibrationReport {
  std::vector<OracleCalibration> oracles;
  DcfParams params;
  std::vector<std::string> warnings;
};

ScoreSample population_scores(const FeatureExtractor& extractor,
                              const Population& pop);
CalibrationReport calibrate(const ExperimentConfig& cfg, const World& world);
CalibrationReport calibrate(const ExperimentConfig& cfg);
Json to_json(const CalibrationReport& report);

struct ResultRecord {
  std::string scenario;
  double rho = 1.0;
  int victim = 0;
  std::string method;
  std::string threshold;  // tau_E or tau_M
  double tau = 0.0;
  bool success = false;
  std::uint64_t queries = 0;
  double final_score = 0.0;
  std::string config_hash;
  std::string error;
};

struct SummaryRow {
  std::string method;
  std::string threshold;
  double rho = 1.0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  double asr = 0.0;
  std::optional<double> mean_queries;  // over successful trials
  std::uint64_t total_queries = 0;
};

struct AttackRun {
  CalibrationReport calibration;
  std::vector<ResultRecord> records;
  std::vector<SummaryRow> summary;
  std::uint64_t ledger_total = 0;
  // File name under traces/ -> JSON lines.
  std::map<std::string, std::vector<std::string>> traces;
  std::optional<Json> orthogonal_set;
};

InverseModel attacker_inverse(const ExperimentConfig& cfg, const World& world);
AttackRun run_attacks(const ExperimentConfig& cfg);

// Grouped by (method, threshold, rho) in order of first appearance.
std::vector<SummaryRow> summarize_records(
    const std::vector<ResultRecord>& records);

std::string results_csv(const std::vector<ResultRecord>& records);
std::string summary_csv(const std::vector<SummaryRow>& rows);
std::string render_summary(const std::vector<SummaryRow>& rows,
                           const CalibrationReport* calibration);

struct AblationRow {
  std::string objective;
  double lambda_ic = 0.0;
  double lambda_sc = 0.0;
  double rho = 1.0;
  double local_mean = 0.0;
  double transfer_mean = 0.0;
};

struct TrainingRun {
  InverseModel model;
  std::vector<double> loss_history;
  std::vector<AblationRow> ablation;
};

// Trains on the attacker's identities; evaluation uses the held-out 20%.
TrainingRun run_train_inverse(const ExperimentConfig& cfg, bool ablation);

struct IdConstraintRow {
  double rho = 1.0;
  SummaryStats local;
  SummaryStats transfer;
  SummaryStats positive;
  SummaryStats negative;
  double tau_e = 0.0;
  double fraction_accepted = 0.0;  // transfer scores >= tau_E
};

struct IdConstraintRun {
  InverseKind inverse = InverseKind::analytic;
  std::vector<IdConstraintRow> rows;
  std::vector<AngularRow> angular;
};

IdConstraintRun run_id_constraints(const ExperimentConfig& cfg);

// Writers. Everything except meta.json is a pure function of the config.
void write_calibration(const std::filesystem::path& dir,
                       const ExperimentConfig& cfg,
                       const CalibrationReport& report);
void write_attack_outputs(const std::filesystem::path& dir,
                          const ExperimentConfig& cfg, const AttackRun& run);
void write_training_outputs(const std::filesystem::path& dir,
                            const ExperimentConfig& cfg,
                            const TrainingRun& run);
void write_id_constraint_outputs(const std::filesystem::path& dir,
                                 const ExperimentConfig& cfg,
                                 const IdConstraintRun& run);

struct ReportOutput {
  std::string text;
  std::string csv;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

ReportOutput report(const std::filesystem::path& dir);

}  // namespace scoreprobe
