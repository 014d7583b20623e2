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

#include "scoreprobe/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "scoreprobe/errors.hpp"
#include "scoreprobe/random.hpp"

namespace scoreprobe {

namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;   // "init"
constexpr std::uint64_t kBatchTag = 0x62617463;  // "batc"
constexpr std::uint64_t kRefTag = 0x72656673;    // "refs"
constexpr std::uint64_t kAngleTag = 0x616e676c;  // "angl"
constexpr double kSignDeadzone = 1e-12;
// Gradient entries this small are round-off; Adam would rescale them to
// full-size steps and walk off an exact solution.
constexpr double kGradientFloor = 1e-12;

// Row-per-sample copies of the batch features and of the re-extracted
// features of their inversions.
struct Forward {
  Matrix f;       // N x d, F(a_i)
  Matrix y;       // N x n, pre-clip
  Matrix clip;    // N x n
  Matrix u;       // N x d, W phi(clip)
  Vector u_norm;  // N
  Matrix g;       // N x d, u / |u|
};

Matrix phi(const Matrix& x, Nonlinearity kind) {
  if (kind == Nonlinearity::saturating) return x.array().tanh().matrix();
  return x;
}

Forward forward(const FeatureExtractor& extractor, const InverseModel& model,
                std::span<const Waveform> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (model.feature_dim() != extractor.feature_dim() ||
      model.output_dim() != extractor.input_dim())
    throw DimensionMismatchError("inverse model does not match extractor");
  const auto n = extractor.input_dim();
  const auto rows = static_cast<Eigen::Index>(batch.size());
  Matrix a(rows, n);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (batch[i].size() != n)
      throw DimensionMismatchError("batch waveform length mismatch");
    a.row(i) = batch[i].samples().transpose();
  }
  const Matrix& w = extractor.weight();
  Forward fw;
  fw.f = phi(a, extractor.kind()) * w.transpose();
  const Vector fn = fw.f.rowwise().norm();
  if ((fn.array() <= 0.0).any())
    throw DegenerateInputError("zero feature in batch");
  fw.f = fn.cwiseInverse().asDiagonal() * fw.f;

  fw.y = fw.f * model.map().transpose();
  fw.y.rowwise() += (model.offset() + model.context()).transpose();
  fw.clip = fw.y.cwiseMax(-1.0).cwiseMin(1.0);
  fw.u = phi(fw.clip, extractor.kind()) * w.transpose();
  fw.u_norm = fw.u.rowwise().norm();
  if ((fw.u_norm.array() <= 0.0).any())
    throw DegenerateInputError("inversion produced a zero feature");
  fw.g = fw.u_norm.cwiseInverse().asDiagonal() * fw.u;
  return fw;
}

double ic_of(const Forward& fw) {
  const double n = static_cast<double>(fw.f.rows());
  return (1.0 - fw.f.cwiseProduct(fw.g).rowwise().sum().array()).sum() / n;
}

double sc_of(const Forward& fw) {
  const double n = static_cast<double>(fw.f.rows());
  const Matrix diff = fw.f * fw.f.transpose() - fw.g * fw.g.transpose();
  return diff.cwiseAbs().sum() / (n * n);
}

double sign_dz(double v) {
  if (std::abs(v) <= kSignDeadzone) return 0.0;
  return v > 0.0 ? 1.0 : -1.0;
}

std::vector<double> column_of_scores(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

std::string_view to_string(InverseKind kind) {
  return kind == InverseKind::analytic ? "analytic" : "trained";
}

InverseKind inverse_kind_from_string(std::string_view name) {
  if (name == "analytic") return InverseKind::analytic;
  if (name == "trained") return InverseKind::trained;
  throw ConfigError("unknown inverse kind: " + std::string(name));
}

InverseModel::InverseModel(InverseKind kind, Matrix map, Vector offset,
                           Vector context, std::uint64_t source_extractor_seed)
    : kind_(kind),
      map_(std::move(map)),
      offset_(std::move(offset)),
      context_(std::move(context)),
      source_seed_(source_extractor_seed) {
  if (map_.rows() < 1 || map_.cols() < 1)
    throw DimensionMismatchError("inverse map must be non-empty");
  if (offset_.size() != map_.rows() || context_.size() != map_.rows())
    throw DimensionMismatchError("offset/context length must equal map rows");
}

Vector InverseModel::pre_clip(const Vector& x) const {
  if (x.size() != map_.cols())
    throw DimensionMismatchError("feature dimension does not match inverse");
  return map_ * x + offset_ + context_;
}

Waveform InverseModel::invert(const UnitFeature& x) const {
  return Waveform::clipped(pre_clip(x.coords()));
}

void InverseModel::set_parameters(Matrix map, Vector offset) {
  if (map.rows() != map_.rows() || map.cols() != map_.cols() ||
      offset.size() != offset_.size())
    throw DimensionMismatchError("parameter shape change");
  map_ = std::move(map);
  offset_ = std::move(offset);
}

void TrainConfig::validate() const {
  if (!(lambda_ic >= 0.0) || !(lambda_sc >= 0.0) ||
      !(lambda_ic + lambda_sc > 0.0))
    throw ConfigError("loss weights must be >= 0 with a positive sum");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (!(lr_initial > 0.0) || !(lr_final > 0.0) || lr_final > lr_initial)
    throw ConfigError("need 0 < lr_final <= lr_initial");
}

double loss_ic(const FeatureExtractor& extractor, const InverseModel& model,
               std::span<const Waveform> batch) {
  return ic_of(forward(extractor, model, batch));
}

double loss_sc(const FeatureExtractor& extractor, const InverseModel& model,
               std::span<const Waveform> batch) {
  if (batch.size() < 2)
    throw std::invalid_argument("L_SC needs a batch of at least two");
  return sc_of(forward(extractor, model, batch));
}

double loss_total(const FeatureExtractor& extractor, const InverseModel& model,
                  std::span<const Waveform> batch, const TrainConfig& config) {
  const Forward fw = forward(extractor, model, batch);
  return config.lambda_ic * ic_of(fw) + config.lambda_sc * sc_of(fw);
}

LossGradient loss_gradient(const FeatureExtractor& extractor,
                           const InverseModel& model,
                           std::span<const Waveform> batch, double lambda_ic,
                           double lambda_sc) {
  const Forward fw = forward(extractor, model, batch);
  const double nb = static_cast<double>(fw.f.rows());

  LossGradient out;
  out.ic = ic_of(fw);
  out.sc = sc_of(fw);
  out.total = lambda_ic * out.ic + lambda_sc * out.sc;

  Matrix sgn = fw.f * fw.f.transpose() - fw.g * fw.g.transpose();
  sgn = sgn.unaryExpr(&sign_dz);
  sgn.diagonal().setZero();

  // dL/dg, then through the normalization u -> u/|u|.
  Matrix dg = (-lambda_ic / nb) * fw.f -
              (2.0 * lambda_sc / (nb * nb)) * (sgn * fw.g);
  const Vector radial = fw.g.cwiseProduct(dg).rowwise().sum();
  Matrix du = dg - radial.asDiagonal() * fw.g;
  du = fw.u_norm.cwiseInverse().asDiagonal() * du;

  Matrix dclip = du * extractor.weight();
  if (extractor.kind() == Nonlinearity::saturating)
    dclip.array() *= 1.0 - fw.clip.array().tanh().square();
  const Matrix dy =
      dclip.cwiseProduct((fw.y.array().abs() < 1.0).cast<double>().matrix());

  out.d_map = dy.transpose() * fw.f;
  out.d_offset = dy.colwise().sum().transpose();
  return out;
}

InverseModel initial_trained_model(const FeatureExtractor& extractor,
                                   std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, {kInitTag}));
  const auto n = extractor.input_dim();
  const auto d = extractor.feature_dim();
  Matrix map = 0.01 * rng.gaussian_matrix(n, d);
  Vector context(n);
  for (Eigen::Index i = 0; i < n; ++i) context[i] = 0.1 * rng.uniform(-1, 1);
  return InverseModel(InverseKind::trained, std::move(map), Vector::Zero(n),
                      std::move(context), extractor.seed());
}

TrainResult train_inverse(const FeatureExtractor& extractor,
                          const Population& pool, const TrainConfig& config) {
  return train_inverse(extractor, pool, config,
                       initial_trained_model(extractor, config.seed));
}

TrainResult train_inverse(const FeatureExtractor& extractor,
                          const Population& pool, const TrainConfig& config,
                          InverseModel start) {
  config.validate();
  const auto pool_size = pool.size();
  if (pool_size < static_cast<std::size_t>(config.batch_size))
    throw std::invalid_argument("pool smaller than batch_size");

  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  Matrix map = start.map();
  Vector offset = start.offset();
  Matrix m_map = Matrix::Zero(map.rows(), map.cols());
  Matrix v_map = m_map;
  Vector m_off = Vector::Zero(offset.size());
  Vector v_off = m_off;

  RandomStream rng(derive_seed(config.seed, {kBatchTag}));
  std::vector<std::size_t> order(pool_size);
  std::vector<Waveform> batch;
  batch.reserve(config.batch_size);
  std::vector<double> history;
  history.reserve(config.steps);

  const double ratio = config.lr_final / config.lr_initial;
  for (int step = 0; step < config.steps; ++step) {
    const double frac =
        config.steps > 1 ? static_cast<double>(step) / (config.steps - 1) : 0.0;
    const double lr = config.lr_initial * std::pow(ratio, frac);

    // Partial Fisher-Yates: batch without replacement.
    std::iota(order.begin(), order.end(), std::size_t{0});
    batch.clear();
    for (int k = 0; k < config.batch_size; ++k) {
      const std::size_t span = pool_size - k;
      const std::size_t j = k + static_cast<std::size_t>(rng.next_u64() % span);
      std::swap(order[k], order[j]);
      batch.push_back(pool.waveforms[order[k]]);
    }

    start.set_parameters(map, offset);
    LossGradient lg = loss_gradient(extractor, start, batch, config.lambda_ic,
                                    config.lambda_sc);
    history.push_back(lg.total);
    if (!std::isfinite(lg.total) || !lg.d_map.allFinite() ||
        !lg.d_offset.allFinite())
      throw TrainingDivergedError(
          "inverse training diverged at step " + std::to_string(step),
          history);

    lg.d_map = (lg.d_map.array().abs() < kGradientFloor).select(0.0, lg.d_map);
    lg.d_offset =
        (lg.d_offset.array().abs() < kGradientFloor).select(0.0, lg.d_offset);

    const double c1 = 1.0 - std::pow(kBeta1, step + 1);
    const double c2 = 1.0 - std::pow(kBeta2, step + 1);
    m_map = kBeta1 * m_map + (1.0 - kBeta1) * lg.d_map;
    v_map = kBeta2 * v_map + (1.0 - kBeta2) * lg.d_map.cwiseAbs2();
    m_off = kBeta1 * m_off + (1.0 - kBeta1) * lg.d_offset;
    v_off = kBeta2 * v_off + (1.0 - kBeta2) * lg.d_offset.cwiseAbs2();
    map.array() -= lr * (m_map.array() / c1) /
                   ((v_map.array() / c2).sqrt() + kEps);
    offset.array() -= lr * (m_off.array() / c1) /
                      ((v_off.array() / c2).sqrt() + kEps);
  }
  start.set_parameters(std::move(map), std::move(offset));
  return TrainResult{std::move(start), std::move(history)};
}

std::pair<Population, Population> split_by_identity(const Population& pool,
                                                    double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  int cut = static_cast<int>(std::lround(train_fraction * pool.identities));
  cut = std::clamp(cut, 1, pool.identities - 1);
  return {pool.subset_by_identity(0, cut),
          pool.subset_by_identity(cut, pool.identities)};
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / n);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

double round_trip_score(const FeatureExtractor& eval_extractor,
                        const FeatureExtractor& cond_extractor,
                        const InverseModel& model, const Waveform& w) {
  const Waveform back = model.invert(cond_extractor.extract(w));
  return cosine(eval_extractor.extract(w), eval_extractor.extract(back))
      .value();
}

RoundTripReport round_trip_report(const FeatureExtractor& eval_extractor,
                                  const FeatureExtractor& cond_extractor,
                                  const InverseModel& model,
                                  const Population& pool,
                                  std::uint64_t reference_seed) {
  if (pool.size() == 0) throw std::invalid_argument("empty pool");
  RoundTripReport r;
  std::vector<UnitFeature> eval_feats;
  eval_feats.reserve(pool.size());
  for (const Waveform& w : pool.waveforms) {
    const Waveform back = model.invert(cond_extractor.extract(w));
    r.local_scores.push_back(
        cosine(cond_extractor.extract(w), cond_extractor.extract(back))
            .value());
    eval_feats.push_back(eval_extractor.extract(w));
    r.transfer_scores.push_back(
        cosine(eval_feats.back(), eval_extractor.extract(back)).value());
  }

  std::vector<std::pair<std::size_t, std::size_t>> negatives;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool.identity_labels[i] == pool.identity_labels[j])
        r.positive_ref.push_back(cosine(eval_feats[i], eval_feats[j]).value());
      else
        negatives.emplace_back(i, j);
    }
  // Equal-count sample of different-identity pairs (all of them if fewer).
  RandomStream rng(derive_seed(reference_seed, {kRefTag}));
  const std::size_t want = std::min(negatives.size(),
                                    std::max<std::size_t>(
                                        r.positive_ref.size(), 1));
  for (std::size_t k = 0; k < want; ++k) {
    const std::size_t j =
        k + static_cast<std::size_t>(rng.next_u64() % (negatives.size() - k));
    std::swap(negatives[k], negatives[j]);
    const auto [a, b] = negatives[k];
    r.negative_ref.push_back(cosine(eval_feats[a], eval_feats[b]).value());
  }

  r.local = summarize(r.local_scores);
  r.transfer = summarize(r.transfer_scores);
  r.positive = summarize(r.positive_ref);
  r.negative = summarize(r.negative_ref);
  return r;
}

std::vector<AngularRow> angular_robustness(const FeatureExtractor& extractor,
                                           const InverseModel& model,
                                           const Population& pool,
                                           std::span<const double> angles,
                                           std::uint64_t seed) {
  if (pool.size() == 0) throw std::invalid_argument("empty pool");
  for (double a : angles)
    if (!(a >= 0.0 && a <= 90.0))
      throw std::invalid_argument("angles must lie in [0, 90] degrees");

  std::vector<UnitFeature> feats;
  feats.reserve(pool.size());
  for (const Waveform& w : pool.waveforms) feats.push_back(extractor.extract(w));

  std::vector<AngularRow> rows;
  for (std::size_t k = 0; k < angles.size(); ++k) {
    RandomStream rng(derive_seed(seed, {kAngleTag, k}));
    std::vector<double> scores;
    scores.reserve(feats.size());
    for (const UnitFeature& x : feats) {
      const UnitFeature probe =
          angles[k] == 0.0 ? x : perturb_angular(x, angles[k], rng);
      scores.push_back(
          cosine(x, extractor.extract(model.invert(probe))).value());
    }
    const SummaryStats s = summarize(scores);
    rows.push_back(AngularRow{angles[k], s.mean, s.std});
  }
  return rows;
}

}  // namespace scoreprobe
