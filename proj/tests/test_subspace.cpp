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
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scoreprobe/errors.hpp"
#include "scoreprobe/harness.hpp"
#include "scoreprobe/subspace.hpp"

using namespace scoreprobe;

namespace {

std::shared_ptr<const FeatureExtractor> linear_extractor() {
  return std::make_shared<const FeatureExtractor>(
      make_extractor(21, 256, 32, Nonlinearity::linear));
}

// Independent pairwise check.
double brute_max_cos(const Matrix& a) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.rows(); ++j)
      if (i != j) worst = std::max(worst, std::abs(a.row(i).dot(a.row(j))));
  return worst;
}

OrthogonalSet default_obs(const FeatureExtractor& f, std::uint64_t seed = 1) {
  const auto probes = probe_corpus(analytic_inverse(f), 64, 0.17, seed);
  return build_delta_obs(probes, f, 0.2, 50, seed);
}

double oracle_cond(const Matrix& a) {
  const auto sv = oracle::singular_values(a);
  return sv.front() / sv.back();
}

}  // namespace

TEST(DeltaObs, StandardBasisFeatures) {
  const auto f = linear_extractor();
  const auto inv = analytic_inverse(*f);
  std::vector<Waveform> pool;
  for (Eigen::Index i = 0; i < 32; ++i) pool.push_back(inv.invert(UnitFeature(Vector::Unit(32, i))));
  const auto obs = build_delta_obs(pool, *f, 0.1, 32, 5);
  EXPECT_EQ(obs.m(), 32u);
  EXPECT_LE(brute_max_cos(obs.features), 1e-9);
  EXPECT_LE(obs.certified_max_abs_cos, 1e-9);
  for (std::size_t i = 0; i < obs.m(); ++i)
    EXPECT_EQ(obs.members[i], pool[obs.indices[i]]);
}

TEST(DeltaObs, IdenticalWaveformsAdmitOne) {
  const auto f = linear_extractor();
  const auto pop = make_population(1, 2, 2, 0.1, 256);
  const std::vector<Waveform> pool{pop.waveforms[0], pop.waveforms[0]};
  try {
    build_delta_obs(pool, *f, 0.5, 2, 1);
    FAIL() << "expected InfeasibleDeltaError";
  } catch (const InfeasibleDeltaError& e) {
    EXPECT_EQ(e.found(), 1u);
  }
  EXPECT_EQ(build_delta_obs(pool, *f, 0.5, 1, 1).m(), 1u);
}

TEST(DeltaObs, RejectsBadArguments) {
  const auto f = linear_extractor();
  const auto pop = make_population(1, 2, 2, 0.1, 256);
  EXPECT_THROW(build_delta_obs(pop, *f, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_delta_obs(pop, *f, 0.2, 0), std::invalid_argument);
  EXPECT_THROW(build_delta_obs(std::span<const Waveform>(), *f, 0.2, 1, 1),
               std::invalid_argument);
}

TEST(DeltaObs, DefaultProbeCorpusCertifies) {
  const auto f = linear_extractor();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto obs = default_obs(*f, seed);
    ASSERT_EQ(obs.m(), 50u);
    EXPECT_LE(brute_max_cos(obs.features), 0.2);
    EXPECT_DOUBLE_EQ(obs.certified_max_abs_cos, brute_max_cos(obs.features));
    for (std::size_t i = 0; i < obs.m(); ++i)
      EXPECT_NEAR((obs.features.row(i) - f->extract(obs.members[i]).coords().transpose()).norm(),
                  0.0, 1e-12);
    EXPECT_LE(oracle_cond(obs.features), 10.0);
  }
}

TEST(DeltaObs, Deterministic) {
  const auto f = linear_extractor();
  const auto a = default_obs(*f, 4);
  const auto b = default_obs(*f, 4);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.features, b.features);
}

TEST(LowCoherenceFrame, UnitRowsBelowTarget) {
  const Matrix frame = low_coherence_frame(32, 64, 0.17, 3);
  ASSERT_EQ(frame.rows(), 64);
  for (Eigen::Index i = 0; i < frame.rows(); ++i)
    EXPECT_NEAR(frame.row(i).norm(), 1.0, 1e-12);
  const double welch = std::sqrt((64.0 - 32.0) / (32.0 * 63.0));
  EXPECT_LE(brute_max_cos(frame), 0.17);
  EXPECT_GE(brute_max_cos(frame), welch);
  EXPECT_DOUBLE_EQ(max_abs_offdiag_cosine(frame), brute_max_cos(frame));
}

TEST(SpAttack, ExactRecoveryAtRhoOne) {
  const auto f = linear_extractor();
  const auto obs = default_obs(*f);
  const auto inv = analytic_inverse(*f);
  const auto victims = make_population(9, 10, 2, 0.1, 256);
  for (int v = 0; v < 10; ++v) {
    const auto tmpl = enroll(*f, victims.waveforms[2 * v], v);
    VerificationOracle oracle(f, tmpl, 50);
    const auto out = sp_attack(oracle, *f, inv, obs);
    EXPECT_EQ(oracle.queries(), 50u);
    EXPECT_EQ(out.recovery.queries_used, 50u);
    EXPECT_GE(cosine(out.recovery.recovered, tmpl.feature).value(), 1 - 1e-6);
    EXPECT_GE(score_against(*f, tmpl, out.attack).value(), 1 - 1e-6);
    EXPECT_NEAR(out.recovery.cond, oracle_cond(obs.features), 1e-9);
    EXPECT_LE(out.recovery.residual, 1e-9);
  }
}

TEST(SpAttack, InsufficientBudgetIssuesNothing) {
  const auto f = linear_extractor();
  const auto obs = default_obs(*f);
  const auto victims = make_population(9, 2, 2, 0.1, 256);
  VerificationOracle oracle(f, enroll(*f, victims.waveforms[0], 0), 49);
  EXPECT_THROW(sp_attack(oracle, *f, analytic_inverse(*f), obs), BudgetExceededError);
  EXPECT_EQ(oracle.queries(), 0u);
}

TEST(SpAttack, UnderdeterminedRecoversProjection) {
  const auto f = linear_extractor();
  const auto probes = probe_corpus(analytic_inverse(*f), 64, 0.17, 6);
  const auto obs = build_delta_obs(probes, *f, 0.2, 10, 6);
  const auto victims = make_population(9, 2, 2, 0.1, 256);
  const auto tmpl = enroll(*f, victims.waveforms[0], 0);
  VerificationOracle oracle(f, tmpl);
  const auto out = sp_attack(oracle, *f, analytic_inverse(*f), obs);

  const Eigen::HouseholderQR<Matrix> qr(obs.features.transpose());
  const Matrix q = qr.householderQ() * Matrix::Identity(32, 10);
  const Vector proj = q * (q.transpose() * tmpl.feature.coords());
  EXPECT_LE((out.recovery.recovered.coords() - proj.normalized()).norm(), 1e-9);
}

TEST(SpAttack, NonAdaptiveScoresMatchMembers) {
  const auto f = linear_extractor();
  const auto obs = default_obs(*f);
  const auto victims = make_population(9, 3, 2, 0.1, 256);
  for (int v = 0; v < 3; ++v) {
    const auto target = std::make_shared<const FeatureExtractor>(
        make_correlated_extractor(*f, {0.5 + 0.2 * v, 40}));
    const auto tmpl = enroll(*target, victims.waveforms[2 * v], v);
    VerificationOracle oracle(target, tmpl);
    const auto out = sp_attack(oracle, *f, analytic_inverse(*f), obs);
    ASSERT_EQ(out.recovery.scores.size(), obs.m());
    for (std::size_t i = 0; i < obs.m(); ++i)
      EXPECT_EQ(out.recovery.scores[i], score_against(*target, tmpl, obs.members[i]).value());
  }
}

TEST(RecoverTemplate, DegenerateScores) {
  const auto f = linear_extractor();
  const auto obs = default_obs(*f);
  EXPECT_THROW(recover_template(obs.features, Vector::Zero(50)), DegenerateRecoveryError);
}

TEST(ErrorCheck, IsometryIsTight) {
  RandomStream rng(30);
  const Eigen::HouseholderQR<Matrix> qr(rng.gaussian_matrix(50, 32));
  const Matrix a = qr.householderQ() * Matrix::Identity(50, 32);
  const Vector y = a * rng.gaussian_vector(32);
  // Perturbation inside the range: relative errors coincide.
  const Vector eps = a * rng.gaussian_vector(32) * 1e-3;
  EXPECT_NEAR(recovery_error_ratio(a, y, eps), 1.0, 1e-9);
  const auto res = recovery_error_check(a, y, 1e-2, 200, rng);
  EXPECT_LE(res.max_ratio, 1.0 + 1e-9);
  EXPECT_EQ(res.ratios.size(), 200u);
}

TEST(ErrorCheck, AdversarialWeakDirection) {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 10;
  a(1, 1) = 1;
  const Vector y = a * Vector::Unit(2, 0);
  const Vector eps = Vector::Unit(2, 1) * 1e-3;
  EXPECT_NEAR(recovery_error_ratio(a, y, eps), 1.0, 1e-9);
  // Along the strong direction the bound is loose.
  EXPECT_LT(recovery_error_ratio(a, y, Vector::Unit(2, 0) * 1e-3), 0.2);
}

TEST(ErrorCheck, RandomSystemsRespectBound) {
  RandomStream rng(31);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const Matrix a = rng.gaussian_matrix(50, 32);
    const Vector y = a * rng.gaussian_vector(32);
    worst = std::max(worst, recovery_error_check(a, y, 0.05, 1, rng).max_ratio);
  }
  EXPECT_LE(worst, 1.0 + 1e-9);
}

TEST(ErrorCheck, Preconditions) {
  RandomStream rng(32);
  Matrix a = rng.gaussian_matrix(10, 4);
  a.col(3) = a.col(2);
  EXPECT_THROW(recovery_error_check(a, a * Vector::Ones(4), 0.1, 5, rng),
               std::invalid_argument);
  const Matrix b = rng.gaussian_matrix(10, 4);
  EXPECT_THROW(recovery_error_check(b, rng.gaussian_vector(10), 0.1, 5, rng),
               std::invalid_argument);
}

// Harness-level SP runs over 100 victims.
class SpSweep : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ExperimentConfig cfg;
    cfg.methods = {kMethodSp};
    cfg.trials = 100;
    run_ = new AttackRun(run_attacks(cfg));
  }
  static void TearDownTestSuite() {
    delete run_;
    run_ = nullptr;
  }
  static const SummaryRow& row(double rho, const std::string& thr) {
    for (const auto& r : run_->summary)
      if (r.rho == rho && r.threshold == thr) return r;
    throw std::out_of_range("missing summary row");
  }
  static AttackRun* run_;
};
AttackRun* SpSweep::run_ = nullptr;

TEST_F(SpSweep, StricterThresholdNeverHelps) {
  for (const auto& cal : run_->calibration.oracles) {
    const bool e_stricter = cal.tau_e >= cal.tau_m;
    const auto& strict = row(cal.rho, e_stricter ? "tau_E" : "tau_M");
    const auto& loose = row(cal.rho, e_stricter ? "tau_M" : "tau_E");
    EXPECT_LE(strict.asr, loose.asr) << "rho " << cal.rho;
  }
}

TEST_F(SpSweep, AsrMonotoneInRho) {
  for (const char* thr : {"tau_E", "tau_M"}) {
    const double rhos[] = {0.5, 0.75, 0.9, 1.0};
    int inversions = 0;
    for (int i = 0; i + 1 < 4; ++i)
      if (row(rhos[i + 1], thr).asr < row(rhos[i], thr).asr) ++inversions;
    EXPECT_LE(inversions, 1) << thr;
  }
  EXPECT_EQ(row(1.0, "tau_E").asr, 1.0);
}
