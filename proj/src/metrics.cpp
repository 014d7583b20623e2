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

#include "scoreprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

namespace {

void check_scores(const std::vector<double>& scores, const char* which) {
  if (scores.empty())
    throw std::invalid_argument(std::string(which) + " scores are empty");
  for (double s : scores)
    if (!(s >= -1.0 && s <= 1.0))
      throw std::invalid_argument(std::string(which) +
                                  " score outside [-1, 1]");
}

// Counts behind FAR/FRR at one threshold, kept as integers so that ties in
// |FAR - FRR| are detected exactly.
struct Counts {
  std::int64_t false_accepts = 0;  // impostor >= tau
  std::int64_t false_rejects = 0;  // genuine < tau
};

class SortedSample {
 public:
  explicit SortedSample(const ScoreSample& sample)
      : genuine_(sample.genuine), impostor_(sample.impostor) {
    std::sort(genuine_.begin(), genuine_.end());
    std::sort(impostor_.begin(), impostor_.end());
  }

  Counts at(double tau) const {
    const auto imp_below =
        std::lower_bound(impostor_.begin(), impostor_.end(), tau) -
        impostor_.begin();
    const auto gen_below =
        std::lower_bound(genuine_.begin(), genuine_.end(), tau) -
        genuine_.begin();
    return Counts{static_cast<std::int64_t>(impostor_.size()) - imp_below,
                  gen_below};
  }

  std::int64_t n_genuine() const {
    return static_cast<std::int64_t>(genuine_.size());
  }
  std::int64_t n_impostor() const {
    return static_cast<std::int64_t>(impostor_.size());
  }

  OperatingPoint point(double tau, const Counts& c) const {
    return OperatingPoint{tau,
                          static_cast<double>(c.false_accepts) / n_impostor(),
                          static_cast<double>(c.false_rejects) / n_genuine()};
  }

 private:
  std::vector<double> genuine_;
  std::vector<double> impostor_;
};

}  // namespace

void ScoreSample::validate() const {
  check_scores(genuine, "genuine");
  check_scores(impostor, "impostor");
}

ErrorRates far_frr(const ScoreSample& sample, double tau) {
  sample.validate();
  const auto fa = std::count_if(sample.impostor.begin(), sample.impostor.end(),
                                [tau](double s) { return s >= tau; });
  const auto fr = std::count_if(sample.genuine.begin(), sample.genuine.end(),
                                [tau](double s) { return s < tau; });
  return ErrorRates{static_cast<double>(fa) / sample.impostor.size(),
                    static_cast<double>(fr) / sample.genuine.size()};
}

std::vector<double> candidate_thresholds(const ScoreSample& sample) {
  sample.validate();
  std::vector<double> pooled;
  pooled.reserve(sample.genuine.size() + sample.impostor.size());
  pooled.insert(pooled.end(), sample.genuine.begin(), sample.genuine.end());
  pooled.insert(pooled.end(), sample.impostor.begin(), sample.impostor.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  std::vector<double> out;
  out.reserve(pooled.size() + 1);
  out.push_back(-1.0);
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
    out.push_back(0.5 * (pooled[i] + pooled[i + 1]));
  out.push_back(1.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EerResult eer(const ScoreSample& sample) {
  const auto taus = candidate_thresholds(sample);
  const SortedSample sorted(sample);
  const std::int64_t ng = sorted.n_genuine();
  const std::int64_t ni = sorted.n_impostor();

  // |FAR - FRR| scaled by ng * ni: |fa * ng - fr * ni|. FAR scaled: fa * ng.
  std::int64_t best_gap = -1;
  std::int64_t best_far = 0;
  double best_tau = 0.0;
  Counts best_counts;
  for (double tau : taus) {
    const Counts c = sorted.at(tau);
    const std::int64_t gap =
        std::llabs(c.false_accepts * ng - c.false_rejects * ni);
    const std::int64_t far_scaled = c.false_accepts * ng;
    // taus ascend, so keeping the first of equal candidates keeps smaller tau.
    if (best_gap < 0 || gap < best_gap ||
        (gap == best_gap && far_scaled < best_far)) {
      best_gap = gap;
      best_far = far_scaled;
      best_tau = tau;
      best_counts = c;
    }
  }
  EerResult out;
  out.operating = sorted.point(best_tau, best_counts);
  out.eer = 0.5 * (out.operating.far + out.operating.frr);
  return out;
}

DcfResult min_dcf(const ScoreSample& sample, const DcfParams& params) {
  if (!(params.p_target > 0.0 && params.p_target < 1.0))
    throw std::invalid_argument("p_target must lie in (0, 1)");
  if (!(params.c_miss > 0.0 && params.c_fa > 0.0))
    throw std::invalid_argument("detection costs must be positive");
  const auto taus = candidate_thresholds(sample);
  const SortedSample sorted(sample);

  DcfResult out;
  bool first = true;
  for (double tau : taus) {
    const OperatingPoint p = sorted.point(tau, sorted.at(tau));
    const double dcf = params.c_miss * p.frr * (1.0 - params.p_target) +
                       params.c_fa * p.far * params.p_target;
    if (first || dcf < out.min_dcf) {
      out.min_dcf = dcf;
      out.operating = p;
      first = false;
    }
  }
  return out;
}

double asr(std::span<const double> final_scores, double tau) {
  if (final_scores.empty())
    throw std::invalid_argument("asr needs at least one attack score");
  const auto hits = std::count_if(final_scores.begin(), final_scores.end(),
                                  [tau](double s) { return s >= tau; });
  return static_cast<double>(hits) / final_scores.size();
}

Discrepancy score_discrepancy(std::span<const double> local,
                              std::span<const double> target) {
  if (local.size() != target.size())
    throw DimensionMismatchError("score lists must be paired");
  if (local.size() < 2)
    throw std::invalid_argument("need at least two paired scores");
  const double n = static_cast<double>(local.size());

  double mean_abs = 0.0, mean_l = 0.0, mean_t = 0.0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    mean_abs += std::abs(local[i] - target[i]);
    mean_l += local[i];
    mean_t += target[i];
  }
  mean_abs /= n;
  mean_l /= n;
  mean_t /= n;

  double var_abs = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    const double a = std::abs(local[i] - target[i]) - mean_abs;
    var_abs += a * a;
    const double dx = local[i] - mean_l;
    const double dy = target[i] - mean_t;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw UndefinedCorrelationError(
        "Pearson correlation undefined for zero-variance scores");

  Discrepancy out;
  out.mean_abs = mean_abs;
  out.std_abs = std::sqrt(var_abs / n);
  out.pearson_r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  return out;
}

}  // namespace scoreprobe
