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
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "scoreprobe/errors.hpp"
#include "scoreprobe/inverse.hpp"
#include "scoreprobe/random.hpp"

using namespace scoreprobe;

namespace {

// F(a) written out by hand.
Vector feature_of(const FeatureExtractor& f, const Vector& a) {
  Vector u = Vector::Zero(f.feature_dim());
  for (Eigen::Index r = 0; r < f.feature_dim(); ++r)
    for (Eigen::Index c = 0; c < f.input_dim(); ++c)
      u[r] += f.weight()(r, c) *
              (f.kind() == Nonlinearity::saturating ? std::tanh(a[c]) : a[c]);
  return u / u.norm();
}

Vector round_trip_of(const FeatureExtractor& f, const InverseModel& m, const Vector& a) {
  Vector y = m.map() * feature_of(f, a) + m.offset() + m.context();
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = std::clamp(y[i], -1.0, 1.0);
  return feature_of(f, y);
}

InverseModel random_model(const FeatureExtractor& f, std::uint64_t seed, double scale) {
  RandomStream rng(seed);
  const auto n = f.input_dim(), d = f.feature_dim();
  Vector ctx(n);
  for (Eigen::Index i = 0; i < n; ++i) ctx[i] = rng.uniform(-0.1, 0.1);
  return InverseModel(InverseKind::trained, scale * rng.gaussian_matrix(n, d),
                      0.1 * rng.gaussian_vector(n), ctx, f.seed());
}

std::vector<Waveform> batch_of(const Population& p, std::size_t count) {
  return {p.waveforms.begin(), p.waveforms.begin() + count};
}

double relative_error(const Vector& got, const Vector& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-300);
}

}  // namespace

TEST(Invert, ClipsAndChecksDimension) {
  const auto f = make_extractor(1, 64, 8, Nonlinearity::linear);
  const InverseModel m = random_model(f, 2, 10.0);
  RandomStream rng(3);
  const Waveform w = m.invert(normalize(rng.gaussian_vector(8)));
  EXPECT_LE(w.samples().cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(m.invert(normalize(rng.gaussian_vector(9))), DimensionMismatchError);
}

TEST(Invert, ZeroModelIsDegenerateDownstream) {
  const auto f = make_extractor(1, 64, 8, Nonlinearity::linear);
  const InverseModel zero(InverseKind::trained, Matrix::Zero(64, 8), Vector::Zero(64),
                          Vector::Zero(64), f.seed());
  RandomStream rng(3);
  const Waveform w = zero.invert(normalize(rng.gaussian_vector(8)));
  EXPECT_THROW(f.extract(w), DegenerateInputError);
}

TEST(Invert, OppositeInputs) {
  const auto f = make_extractor(1, 64, 8, Nonlinearity::linear);
  const InverseModel m = analytic_inverse(f);
  RandomStream rng(4);
  const UnitFeature x = normalize(rng.gaussian_vector(8));
  EXPECT_NEAR(cosine(f.extract(m.invert(x)), f.extract(m.invert(-x))).value(), -1.0, 1e-9);
}

TEST(Losses, AnalyticInverseIsExact) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto p = make_population(2, 10, 4, 0.1, 256);
  const InverseModel m = analytic_inverse(f);
  EXPECT_LE(loss_ic(f, m, p.waveforms), 1e-6);
  EXPECT_LE(loss_sc(f, m, p.waveforms), 1e-6);
}

TEST(Losses, MatchHandRolledFormulas) {
  for (auto kind : {Nonlinearity::linear, Nonlinearity::saturating}) {
    const auto f = make_extractor(5, 48, 8, kind);
    const auto p = make_population(6, 4, 2, 0.1, 48);
    const auto batch = batch_of(p, 8);
    const InverseModel m = random_model(f, 7, 0.5);
    double ic = 0, sc = 0;
    std::vector<Vector> a, b;
    for (const auto& w : batch) {
      a.push_back(feature_of(f, w.samples()));
      b.push_back(round_trip_of(f, m, w.samples()));
      ic += 1 - a.back().dot(b.back());
    }
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) sc += std::abs(a[i].dot(a[j]) - b[i].dot(b[j]));
    EXPECT_NEAR(loss_ic(f, m, batch), ic / 8, 1e-12);
    EXPECT_NEAR(loss_sc(f, m, batch), sc / 64, 1e-12);
    const double l = loss_ic(f, m, batch), s = loss_sc(f, m, batch);
    EXPECT_GE(l, 0);
    EXPECT_LE(l, 2);
    EXPECT_GE(s, 0);
    EXPECT_LE(s, 2);
  }
}

TEST(Losses, OrthogonalAndCollapsedCases) {
  const auto f = make_extractor(5, 16, 4, Nonlinearity::linear);
  // Single-identity pool in which every feature is e1 and every inversion
  // maps to a waveform whose feature is e2.
  const InverseModel inv = analytic_inverse(f);
  const Waveform e1_wave = inv.invert(UnitFeature(Vector::Unit(4, 0)));
  const Waveform e2_wave = inv.invert(UnitFeature(Vector::Unit(4, 1)));
  const Vector target = e2_wave.samples();
  const InverseModel to_e2(InverseKind::trained, Matrix::Zero(16, 4), target,
                           Vector::Zero(16), f.seed());
  const std::vector<Waveform> batch{e1_wave, e1_wave, e1_wave};
  EXPECT_NEAR(loss_ic(f, to_e2, batch), 1.0, 1e-9);

  // Collapse: every inversion is the same waveform, so S~ = 1.
  const auto p = make_population(6, 3, 2, 0.1, 16);
  double want = 0;
  for (const auto& wi : p.waveforms)
    for (const auto& wj : p.waveforms)
      want += std::abs(f.extract(wi).coords().dot(f.extract(wj).coords()) - 1.0);
  EXPECT_NEAR(loss_sc(f, to_e2, p.waveforms), want / 36, 1e-12);
  EXPECT_THROW(loss_sc(f, to_e2, std::vector<Waveform>{e1_wave}), std::invalid_argument);
}

TEST(Losses, TotalIsLinear) {
  const auto f = make_extractor(5, 48, 8, Nonlinearity::linear);
  const auto p = make_population(6, 4, 2, 0.1, 48);
  const InverseModel m = random_model(f, 8, 0.5);
  TrainConfig c;
  c.lambda_ic = 1;
  c.lambda_sc = 0;
  EXPECT_DOUBLE_EQ(loss_total(f, m, p.waveforms, c), loss_ic(f, m, p.waveforms));
  c.lambda_ic = 5;
  c.lambda_sc = 1;
  const double base = loss_total(f, m, p.waveforms, c);
  EXPECT_NEAR(base, 5 * loss_ic(f, m, p.waveforms) + loss_sc(f, m, p.waveforms), 1e-12);
  c.lambda_ic = 10;
  c.lambda_sc = 2;
  EXPECT_NEAR(loss_total(f, m, p.waveforms, c), 2 * base, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
  for (auto kind : {Nonlinearity::linear, Nonlinearity::saturating}) {
    const auto f = make_extractor(11, 24, 6, kind);
    const auto p = make_population(12, 4, 2, 0.1, 24);
    for (int point = 0; point < 20; ++point) {
      InverseModel m = random_model(f, 100 + point, 0.4);
      for (auto [lic, lsc] : {std::pair{1.0, 0.0}, std::pair{0.0, 1.0}}) {
        const LossGradient g = loss_gradient(f, m, p.waveforms, lic, lsc);
        Matrix map = m.map();
        Vector off = m.offset();
        auto eval = [&] {
          InverseModel probe = m;
          probe.set_parameters(map, off);
          return lic * loss_ic(f, probe, p.waveforms) + lsc * loss_sc(f, probe, p.waveforms);
        };
        Vector fd_map(map.size()), an_map(map.size());
        for (Eigen::Index k = 0; k < map.size(); ++k) {
          fd_map[k] = oracle::central_difference(eval, map.data()[k], 1e-5);
          an_map[k] = g.d_map.data()[k];
        }
        Vector fd_off(off.size());
        for (Eigen::Index k = 0; k < off.size(); ++k)
          fd_off[k] = oracle::central_difference(eval, off[k], 1e-5);
        EXPECT_LE(relative_error(an_map, fd_map), 1e-4) << "point " << point;
        EXPECT_LE(relative_error(g.d_offset, fd_off), 1e-4) << "point " << point;
      }
    }
  }
}

TEST(Train, AnalyticInverseIsFixedPoint) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto p = make_population(2, 20, 5, 0.1, 256);
  TrainConfig c;
  c.steps = 50;
  const auto r = train_inverse(f, p, c, analytic_inverse(f));
  for (double l : r.loss_history) EXPECT_LE(l, 1e-6);
}

TEST(Train, ReducesLossAndGeneralizes) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto pool = make_population(2, 50, 10, 0.1, 256);
  const auto [train, held] = split_by_identity(pool);
  EXPECT_EQ(train.identities, 40);
  EXPECT_EQ(held.identities, 10);
  TrainConfig c;
  c.steps = 600;
  const auto r = train_inverse(f, train, c);
  ASSERT_EQ(r.loss_history.size(), 600u);
  EXPECT_LE(r.loss_history.back(), 0.5 * r.loss_history.front());
  const auto rep = round_trip_report(f, f, r.model, held);
  EXPECT_GE(rep.local.mean, 0.9);
}

TEST(Train, DivergenceCarriesHistory) {
  const auto f = make_extractor(1, 32, 4, Nonlinearity::linear);
  const auto p = make_population(2, 4, 4, 0.1, 32);
  InverseModel bad = initial_trained_model(f, 1);
  Vector nan_offset = Vector::Constant(32, std::nan(""));
  bad.set_parameters(bad.map(), nan_offset);
  TrainConfig c;
  c.batch_size = 8;
  try {
    train_inverse(f, p, c, bad);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_EQ(e.history().size(), 1u);
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.lambda_ic = 0;
  c.lambda_sc = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  const auto f = make_extractor(1, 32, 4, Nonlinearity::linear);
  const auto p = make_population(2, 2, 2, 0.1, 32);
  EXPECT_THROW(train_inverse(f, p, TrainConfig{}), std::invalid_argument);
}

TEST(RoundTrip, AnalyticReportAndReferences) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto pool = make_population(3, 20, 5, 0.1, 256);
  const auto rep = round_trip_report(f, f, analytic_inverse(f), pool);
  for (double s : rep.local_scores) EXPECT_GE(s, 1 - 1e-6);
  EXPECT_EQ(rep.positive_ref.size(), 20u * 10u);
  EXPECT_EQ(rep.negative_ref.size(), rep.positive_ref.size());
  EXPECT_GT(rep.positive.mean, rep.negative.mean);
}

// An unrelated target extractor does not push the round trip down to impostor
// level: the reconstruction keeps the component of w inside the row space of
// the local weights, so E[s_T] tracks ||P w|| / ||w|| (about sqrt(d / n)).
TEST(RoundTrip, RhoZeroKeepsOnlyTheProjectedComponent) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto t = make_correlated_extractor(f, {0.0, 77});
  const auto pool = make_population(3, 40, 5, 0.1, 256);
  const auto rep = round_trip_report(t, f, analytic_inverse(f), pool);

  const Eigen::HouseholderQR<Matrix> qr(f.weight().transpose());
  const Matrix basis = qr.householderQ() * Matrix::Identity(256, 32);
  double predicted = 0;
  for (const auto& w : pool.waveforms)
    predicted += (basis.transpose() * w.samples()).norm() / w.samples().norm();
  predicted /= static_cast<double>(pool.size());

  const double se = rep.transfer.std / std::sqrt(static_cast<double>(rep.transfer.count));
  EXPECT_LT(std::abs(rep.transfer.mean - predicted), 4 * se + 0.03);
  EXPECT_LT(rep.transfer.mean, rep.positive.mean - 0.3);
  EXPECT_GT(rep.transfer.mean, rep.negative.mean);
}

TEST(Angular, AnalyticFollowsCosine) {
  const auto f = make_extractor(1, 256, 32, Nonlinearity::linear);
  const auto pool = make_population(3, 10, 5, 0.1, 256);
  const double angles[] = {0, 10, 20, 30, 40};
  const auto rows = angular_robustness(f, analytic_inverse(f), pool, angles);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows)
    EXPECT_NEAR(r.mean, std::cos(r.angle_degrees * std::numbers::pi / 180), 1e-6);
  const double bad[] = {95};
  EXPECT_THROW(angular_robustness(f, analytic_inverse(f), pool, bad), std::invalid_argument);
}

TEST(Angular, ZeroRowIsPlainRoundTrip) {
  const auto f = make_extractor(1, 64, 8, Nonlinearity::linear);
  const auto pool = make_population(3, 5, 4, 0.1, 64);
  const InverseModel m = random_model(f, 5, 0.5);
  const double angles[] = {0};
  const auto rows = angular_robustness(f, m, pool, angles);
  const auto rep = round_trip_report(f, f, m, pool);
  EXPECT_DOUBLE_EQ(rows[0].mean, rep.local.mean);
  EXPECT_DOUBLE_EQ(rows[0].std, rep.local.std);
}
