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

#include <cstddef>
#include <span>
#include <vector>

namespace scoreprobe {

// Similarity scores of same-identity (genuine) and different-identity
// (impostor) trials. Accept convention: score >= tau.
struct ScoreSample {
  std::vector<double> genuine;
  std::vector<double> impostor;

  // Throws std::invalid_argument on empty lists or values outside [-1, 1].
  void validate() const;
};

struct ErrorRates {
  double far = 0.0;
  double frr = 0.0;
};

struct OperatingPoint {
  double tau = 0.0;
  double far = 0.0;
  double frr = 0.0;
};

// far = fraction of impostor scores >= tau, frr = fraction of genuine < tau.
ErrorRates far_frr(const ScoreSample& sample, double tau);

// Midpoints between adjacent distinct pooled scores plus the -1 and +1
// sentinels, ascending. FAR and FRR are step functions of tau, so this set
// reaches every attainable (FAR, FRR) pair.
std::vector<double> candidate_thresholds(const ScoreSample& sample);

struct EerResult {
  double eer = 0.0;
  OperatingPoint operating;
};

// Candidate minimizing |FAR - FRR|; ties go to smaller FAR, then smaller tau.
EerResult eer(const ScoreSample& sample);

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;
};

struct DcfResult {
  double min_dcf = 0.0;
  OperatingPoint operating;
};

// Minimizes c_miss * FRR * (1 - p_target) + c_fa * FAR * p_target over the
// candidate thresholds; ties go to the smaller tau.
DcfResult min_dcf(const ScoreSample& sample, const DcfParams& params = {});

// Fraction of final attack scores >= tau.
double asr(std::span<const double> final_scores, double tau);

struct Discrepancy {
  double mean_abs = 0.0;
  double std_abs = 0.0;  // population standard deviation
  double pearson_r = 0.0;
};

Discrepancy score_discrepancy(std::span<const double> local,
                              std::span<const double> target);

}  // namespace scoreprobe
