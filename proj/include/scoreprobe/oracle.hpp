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

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>

#include "scoreprobe/geometry.hpp"
#include "scoreprobe/synthworld.hpp"

namespace scoreprobe {

struct EnrolledTemplate {
  UnitFeature feature;
  int identity_label = 0;
};

EnrolledTemplate enroll(const FeatureExtractor& extractor, const Waveform& w,
                        int label);

// Thread-safe query counter with an optional hard budget.
class QueryLedger {
 public:
  explicit QueryLedger(std::optional<std::uint64_t> budget = std::nullopt);

  QueryLedger(const QueryLedger&) = delete;
  QueryLedger& operator=(const QueryLedger&) = delete;

  // Reserves one query; throws BudgetExceededError when none is left.
  void charge();

  std::uint64_t count() const { return count_.load(std::memory_order_relaxed); }
  std::optional<std::uint64_t> budget() const { return budget_; }
  std::optional<std::uint64_t> remaining() const;

 private:
  std::atomic<std::uint64_t> count_{0};
  std::optional<std::uint64_t> budget_;
};

// The black-box verification interface. Only scores, decisions and ledger
// totals leave this object; the extractor and the enrolled template stay
// private.
class VerificationOracle {
 public:
  VerificationOracle(std::shared_ptr<const FeatureExtractor> extractor,
                     EnrolledTemplate enrolled,
                     std::optional<std::uint64_t> budget = std::nullopt);

  // <F_T(w), t_v>; one query.
  SimilarityScore query_score(const Waveform& w);
  // score >= tau; one query.
  bool verify(const Waveform& w, double tau);

  std::uint64_t queries() const { return ledger_.count(); }
  std::optional<std::uint64_t> budget() const { return ledger_.budget(); }
  std::optional<std::uint64_t> remaining() const { return ledger_.remaining(); }
  // Expected number of samples per submitted waveform.
  Eigen::Index waveform_length() const { return extractor_->input_dim(); }

 private:
  std::shared_ptr<const FeatureExtractor> extractor_;
  EnrolledTemplate enrolled_;
  QueryLedger ledger_;
};

// Experimenter-side scoring for evaluating attack outputs; never charged to
// any ledger.
SimilarityScore score_against(const FeatureExtractor& extractor,
                              const EnrolledTemplate& enrolled,
                              const Waveform& w);

}  // namespace scoreprobe
