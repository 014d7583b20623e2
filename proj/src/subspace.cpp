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

#include "scoreprobe/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

namespace {

constexpr std::uint64_t kOrderTag = 0x6f726472;  // "ordr"
constexpr std::uint64_t kFrameTag = 0x6672616d;  // "fram"
constexpr double kConsistencyTolerance = 1e-9;

Eigen::Index numerical_rank(const Matrix& a) {
  const Vector s = singular_values(a);
  if (s.size() == 0 || s[0] <= 0.0) return 0;
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > kSvdRelativeCutoff * s[0]) ++r;
  return r;
}

}  // namespace

double max_abs_offdiag_cosine(const Matrix& rows) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    for (Eigen::Index j = i + 1; j < rows.rows(); ++j)
      worst = std::max(worst, std::abs(rows.row(i).dot(rows.row(j))));
  return worst;
}

OrthogonalSet build_delta_obs(std::span<const Waveform> pool,
                              const FeatureExtractor& extractor, double delta,
                              std::size_t m, std::uint64_t order_seed) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw std::invalid_argument("delta must lie in [0, 1)");
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  if (pool.empty()) throw std::invalid_argument("empty pool");

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng(derive_seed(order_seed, {kOrderTag}));
  for (std::size_t k = order.size(); k > 1; --k)
    std::swap(order[k - 1], order[rng.next_u64() % k]);

  const auto d = extractor.feature_dim();
  OrthogonalSet out;
  out.delta = delta;
  out.order_seed = order_seed;
  Matrix admitted(static_cast<Eigen::Index>(m), d);
  Eigen::Index count = 0;
  for (std::size_t idx : order) {
    const Vector f = extractor.extract(pool[idx]).coords();
    bool ok = true;
    for (Eigen::Index r = 0; r < count && ok; ++r)
      ok = std::abs(admitted.row(r).dot(f)) <= delta;
    if (!ok) continue;
    admitted.row(count++) = f.transpose();
    out.members.push_back(pool[idx]);
    out.indices.push_back(idx);
    if (static_cast<std::size_t>(count) == m) break;
  }
  if (static_cast<std::size_t>(count) < m)
    throw InfeasibleDeltaError(static_cast<std::size_t>(count), m, delta);

  out.features = std::move(admitted);
  out.certified_max_abs_cos = max_abs_offdiag_cosine(out.features);
  if (out.certified_max_abs_cos > delta)
    throw InfeasibleDeltaError(0, m, delta);
  return out;
}

OrthogonalSet build_delta_obs(const Population& pool,
                              const FeatureExtractor& extractor, double delta,
                              std::size_t m) {
  return build_delta_obs(pool.waveforms, extractor, delta, m, pool.seed);
}

Matrix low_coherence_frame(Eigen::Index d, std::size_t count,
                           double coherence, std::uint64_t seed,
                           int max_iter) {
  if (d < 2 || count < 1) throw std::invalid_argument("empty frame request");
  if (!(coherence > 0.0 && coherence < 1.0))
    throw std::invalid_argument("coherence must lie in (0, 1)");
  constexpr double kStep = 0.05;
  constexpr double kMargin = 0.9;

  RandomStream rng(derive_seed(seed, {kFrameTag}));
  const auto rows = static_cast<Eigen::Index>(count);
  Matrix v = rng.gaussian_matrix(rows, d);
  v.rowwise().normalize();
  Matrix best = v;
  double best_coh = max_abs_offdiag_cosine(v);
  for (int it = 0; it < max_iter && best_coh > coherence; ++it) {
    Matrix g = v * v.transpose();
    g.diagonal().setZero();
    // Push apart only the pairs near or above the target.
    g = (g.array().abs() > kMargin * coherence).select(g, 0.0);
    v -= kStep * g * v;
    v.rowwise().normalize();
    const double coh = max_abs_offdiag_cosine(v);
    if (coh < best_coh) {
      best_coh = coh;
      best = v;
    }
  }
  return best;
}

std::vector<Waveform> probe_corpus(const InverseModel& model, std::size_t count,
                                   double coherence, std::uint64_t seed) {
  const Matrix frame =
      low_coherence_frame(model.feature_dim(), count, coherence, seed);
  std::vector<Waveform> out;
  out.reserve(count);
  for (Eigen::Index i = 0; i < frame.rows(); ++i)
    out.push_back(model.invert(UnitFeature(frame.row(i).transpose())));
  return out;
}

RecoveryResult recover_template(const Matrix& a, const Vector& scores) {
  const LeastSquaresResult ls = least_squares(a, scores);
  if (!(ls.solution.norm() > 1e-12))
    throw DegenerateRecoveryError("least-squares template estimate is zero");
  RecoveryResult r{ls.solution, normalize(ls.solution),
                   std::vector<double>(scores.data(),
                                       scores.data() + scores.size()),
                   ls.residual, condition_number(a),
                   static_cast<std::uint64_t>(scores.size())};
  return r;
}

SpOutcome sp_attack(VerificationOracle& oracle, const FeatureExtractor& local,
                    const InverseModel& model, const OrthogonalSet& obs) {
  const auto m = obs.m();
  if (m == 0) throw std::invalid_argument("empty orthogonal set");
  if (obs.features.cols() != local.feature_dim() ||
      model.feature_dim() != local.feature_dim())
    throw DimensionMismatchError("set, extractor and inverse disagree on d");
  const auto left = oracle.remaining();
  if (left && *left < m) throw BudgetExceededError(oracle.queries());

  // The whole query list is fixed by obs before the first response.
  Vector s(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i)
    s[static_cast<Eigen::Index>(i)] =
        oracle.query_score(obs.members[i]).value();

  RecoveryResult rec = recover_template(obs.features, s);
  Waveform attack = model.invert(rec.recovered);
  return SpOutcome{std::move(rec), std::move(attack)};
}

double recovery_error_ratio(const Matrix& a, const Vector& y,
                            const Vector& eps) {
  const double y_norm = y.norm();
  const double e_norm = eps.norm();
  if (!(y_norm > 0.0) || !(e_norm > 0.0))
    throw DegenerateInputError("zero scores or zero perturbation");
  const Vector x = least_squares(a, y).solution;
  const Vector xp = least_squares(a, y + eps).solution;
  const double rel_x = (xp - x).norm() / x.norm();
  return rel_x / (condition_number(a) * e_norm / y_norm);
}

ErrorCheckResult recovery_error_check(const Matrix& a, const Vector& y,
                                      double noise_level, int trials,
                                      RandomStream& rng) {
  if (a.rows() != y.size())
    throw DimensionMismatchError("A rows must equal length of y");
  if (numerical_rank(a) != a.cols())
    throw DegenerateInputError("A must have full column rank");
  if (!(noise_level > 0.0)) throw std::invalid_argument("noise_level <= 0");
  if (trials < 0) throw std::invalid_argument("trials < 0");
  const LeastSquaresResult base = least_squares(a, y);
  if (!(y.norm() > 0.0))
    throw DegenerateInputError("y must be non-zero");
  // The bound is for perturbing an exact system y = A x.
  if (base.residual > kConsistencyTolerance * y.norm())
    throw std::invalid_argument("y is not in the range of A");

  ErrorCheckResult out;
  out.ratios.reserve(trials);
  for (int t = 0; t < trials; ++t) {
    Vector eps = rng.gaussian_vector(y.size());
    eps *= noise_level * y.norm() / eps.norm();
    out.ratios.push_back(recovery_error_ratio(a, y, eps));
    out.max_ratio = std::max(out.max_ratio, out.ratios.back());
  }
  return out;
}

}  // namespace scoreprobe
