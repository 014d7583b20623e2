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

#include "scoreprobe/nes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

namespace {

// Queries left for this attack: the config cap and the oracle budget.
class AttackBudget {
 public:
  AttackBudget(VerificationOracle& oracle, std::optional<std::uint64_t> cap)
      : oracle_(oracle), cap_(cap), start_(oracle.queries()) {}

  std::uint64_t used() const { return oracle_.queries() - start_; }

  bool allows(std::uint64_t k) const {
    if (cap_ && used() + k > *cap_) return false;
    const auto left = oracle_.remaining();
    return !left || *left >= k;
  }

 private:
  VerificationOracle& oracle_;
  std::optional<std::uint64_t> cap_;
  std::uint64_t start_;
};

struct Space {
  Eigen::Index dim = 0;
  std::function<Vector(RandomStream&)> draw_start;
  // Waveform submitted for search point x (perturbed or not).
  std::function<Waveform(const Vector&)> decode;
  std::function<Vector(const Vector& x, double lr, const Vector& velocity)>
      step;
  bool latent = false;
};

std::vector<Vector> draw_perturbations(const NesConfig& cfg, Eigen::Index dim,
                                       RandomStream& rng) {
  std::vector<Vector> eps;
  eps.reserve(cfg.samples_per_draw);
  if (cfg.antithetic) {
    for (int i = 0; i < cfg.samples_per_draw / 2; ++i) {
      eps.push_back(rng.gaussian_vector(dim));
      eps.push_back(-eps.back());
    }
  } else {
    for (int i = 0; i < cfg.samples_per_draw; ++i)
      eps.push_back(rng.gaussian_vector(dim));
  }
  return eps;
}

AttackTrace run_nes(VerificationOracle& oracle, double tau,
                    const NesConfig& cfg, RandomStream& rng,
                    const Space& space) {
  cfg.validate();
  AttackBudget budget(oracle, cfg.query_budget);
  AttackTrace trace;

  const auto finish = [&](const char* reason) {
    trace.total_queries = budget.used();
    trace.stop_reason = reason;
    return trace;
  };
  const auto note_best = [&](double s, const Vector& x, const Waveform& w) {
    if (s <= trace.best_score && !trace.steps.empty()) return false;
    trace.best_score = s;
    trace.best_waveform = w;
    if (space.latent) trace.best_latent = UnitFeature(x);
    return true;
  };

  const auto pool = static_cast<std::uint64_t>(cfg.candidate_pool);
  if (!budget.allows(pool)) return finish("budget");

  // Initialization: C random candidates, all charged, best S kept.
  std::vector<Vector> cands;
  std::vector<double> cand_scores;
  try {
    for (int c = 0; c < cfg.candidate_pool; ++c) {
      cands.push_back(space.draw_start(rng));
      cand_scores.push_back(oracle.query_score(space.decode(cands.back())).value());
    }
  } catch (const BudgetExceededError&) {
    return finish("budget");
  }
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cand_scores[a] > cand_scores[b];
  });
  note_best(cand_scores[order[0]], cands[order[0]],
            space.decode(cands[order[0]]));
  trace.steps.push_back(StepRecord{0, budget.used(), trace.best_score});
  if (trace.best_score >= tau) {
    trace.success = true;
    trace.queries_at_success = budget.used();
    return finish("success");
  }

  const auto per_iter = static_cast<std::uint64_t>(cfg.samples_per_draw) + 1;
  const double decay = cfg.lr_min / cfg.lr_initial;
  const char* reason = "max_iter";
  try {
    for (int s = 0; s < cfg.selected; ++s) {
      Vector x = cands[order[s]];
      Vector velocity = Vector::Zero(space.dim);
      int stale = 0;
      for (int it = 0; it < cfg.max_iter; ++it) {
        if (!budget.allows(per_iter)) return finish("budget");
        const double frac =
            cfg.max_iter > 1 ? static_cast<double>(it) / (cfg.max_iter - 1)
                             : 0.0;
        const double lr = cfg.lr_initial * std::pow(decay, frac);

        const std::vector<Vector> eps = draw_perturbations(cfg, space.dim, rng);
        std::vector<double> losses;
        losses.reserve(eps.size());
        for (const Vector& e : eps)
          losses.push_back(
              1.0 - oracle.query_score(space.decode(x + cfg.sigma * e)).value());
        velocity = cfg.momentum * velocity +
                   nes_gradient(losses, eps, cfg.sigma);
        x = space.step(x, lr, velocity);

        const Waveform w = space.decode(x);
        const double score = oracle.query_score(w).value();
        ++trace.iterations;
        if (note_best(score, x, w))
          stale = 0;
        else
          ++stale;
        trace.steps.push_back(
            StepRecord{trace.iterations, budget.used(), trace.best_score});
        if (score >= tau) {
          trace.success = true;
          trace.queries_at_success = budget.used();
          return finish("success");
        }
        if (cfg.early_stop_window && stale >= *cfg.early_stop_window) {
          reason = "early_stop";
          break;
        }
        if (it + 1 == cfg.max_iter) reason = "max_iter";
      }
    }
  } catch (const BudgetExceededError&) {
    return finish("budget");
  }
  return finish(reason);
}

}  // namespace

void NesConfig::validate() const {
  if (samples_per_draw < 1) throw ConfigError("samples_per_draw must be >= 1");
  if (antithetic && samples_per_draw % 2 != 0)
    throw ConfigError("antithetic sampling needs an even samples_per_draw");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be > 0");
  if (!(lr_initial > 0.0) || !(lr_min > 0.0) || lr_min > lr_initial)
    throw ConfigError("need 0 < lr_min <= lr_initial");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw ConfigError("momentum must lie in [0, 1)");
  if (max_iter < 0) throw ConfigError("max_iter must be >= 0");
  if (candidate_pool < 1) throw ConfigError("candidate_pool must be >= 1");
  if (selected < 1 || selected > candidate_pool)
    throw ConfigError("need 1 <= selected <= candidate_pool");
  if (early_stop_window && *early_stop_window < 1)
    throw ConfigError("early_stop_window must be >= 1");
}

NesConfig NesConfig::audio_table() {
  NesConfig c;
  c.samples_per_draw = 50;
  c.sigma = 1e-3;
  c.lr_initial = 0.1;
  c.lr_min = 1e-4;
  return c;
}

NesConfig NesConfig::latent_table() {
  NesConfig c;
  c.samples_per_draw = 50;
  c.sigma = 5.0;
  c.lr_initial = 5e-2;
  c.lr_min = 1e-6;
  return c;
}

NesConfig NesConfig::audio_synthetic() {
  NesConfig c = audio_table();
  c.samples_per_draw = 10;
  c.sigma = 1.0;
  c.lr_initial = 0.03;
  c.lr_min = 3e-5;
  return c;
}

NesConfig NesConfig::latent_synthetic() {
  NesConfig c = latent_table();
  c.sigma = 0.25;
  c.lr_initial = 0.05;
  c.lr_min = 1e-6;
  return c;
}

Vector nes_gradient(std::span<const double> losses,
                    std::span<const Vector> perturbations, double sigma) {
  if (losses.size() != perturbations.size())
    throw DimensionMismatchError("losses and perturbations differ in length");
  if (losses.empty()) throw std::invalid_argument("need at least one sample");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  const auto dim = perturbations.front().size();
  Vector g = Vector::Zero(dim);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (perturbations[i].size() != dim)
      throw DimensionMismatchError("perturbations differ in dimension");
    g += losses[i] * perturbations[i];
  }
  return g / (static_cast<double>(losses.size()) * sigma);
}

AttackTrace audio_nes(VerificationOracle& oracle, double tau,
                      const NesConfig& config, RandomStream& rng) {
  Space space;
  space.dim = oracle.waveform_length();
  space.draw_start = [dim = space.dim](RandomStream& r) {
    return Vector(r.gaussian_vector(dim).cwiseMax(-1.0).cwiseMin(1.0));
  };
  space.decode = [](const Vector& x) { return Waveform::clipped(x); };
  space.step = [](const Vector& x, double lr, const Vector& v) {
    const Vector sgn = v.unaryExpr(
        [](double e) { return e > 0.0 ? 1.0 : (e < 0.0 ? -1.0 : 0.0); });
    return Vector((x - lr * sgn).cwiseMax(-1.0).cwiseMin(1.0));
  };
  return run_nes(oracle, tau, config, rng, space);
}

AttackTrace latent_nes(VerificationOracle& oracle, const InverseModel& model,
                       double tau, const NesConfig& config,
                       RandomStream& rng) {
  if (model.output_dim() != oracle.waveform_length())
    throw DimensionMismatchError("inverse output length differs from oracle");
  Space space;
  space.dim = model.feature_dim();
  space.latent = true;
  space.draw_start = [dim = space.dim](RandomStream& r) {
    return normalize(r.gaussian_vector(dim)).coords();
  };
  space.decode = [&model](const Vector& x) {
    return model.invert(normalize(x));
  };
  space.step = [](const Vector& x, double lr, const Vector& v) {
    return normalize(x - lr * v).coords();
  };
  return run_nes(oracle, tau, config, rng, space);
}

Vector cosine_loss_gradient(const FeatureExtractor& extractor,
                            const UnitFeature& target, const Vector& samples) {
  if (target.dim() != extractor.feature_dim())
    throw DimensionMismatchError("target dimension differs from extractor");
  const Vector u = extractor.activation(samples);
  const double norm = u.norm();
  if (!(norm > 0.0)) throw DegenerateInputError("zero feature activation");
  const Vector g = u / norm;
  const Vector& x = target.coords();
  const Vector du = -(x - g * g.dot(x)) / norm;
  Vector grad = extractor.weight().transpose() * du;
  if (extractor.kind() == Nonlinearity::saturating)
    grad.array() *= 1.0 - samples.array().tanh().square();
  return grad;
}

GdResult audio_gd(const FeatureExtractor& extractor, const UnitFeature& target,
                  const Waveform& start, const GdConfig& config) {
  if (!(config.learning_rate > 0.0) || config.max_iter < 0 ||
      !(config.tolerance >= 0.0))
    throw ConfigError("invalid descent parameters");
  Vector w = start.samples();
  std::vector<double> history;
  const auto loss_at = [&](const Vector& s) {
    return 1.0 - cosine(extractor.extract(Waveform(s)), target).value();
  };
  history.push_back(loss_at(w));
  for (int it = 0; it < config.max_iter; ++it) {
    const Vector grad = cosine_loss_gradient(extractor, target, w);
    w = (w - config.learning_rate * grad).cwiseMax(-1.0).cwiseMin(1.0);
    if (!w.allFinite())
      throw TrainingDivergedError("waveform descent diverged", history);
    history.push_back(loss_at(w));
    if (!std::isfinite(history.back()))
      throw TrainingDivergedError("waveform descent diverged", history);
    if (std::abs(history.back() - history[history.size() - 2]) <=
        config.tolerance)
      break;
  }
  return GdResult{Waveform(std::move(w)), std::move(history)};
}

}  // namespace scoreprobe
