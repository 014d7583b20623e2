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

#include "scoreprobe/oracle.hpp"

#include <string>

#include "scoreprobe/errors.hpp"

namespace scoreprobe {

EnrolledTemplate enroll(const FeatureExtractor& extractor, const Waveform& w,
                        int label) {
  return EnrolledTemplate{extractor.extract(w), label};
}

QueryLedger::QueryLedger(std::optional<std::uint64_t> budget)
    : budget_(budget) {}

void QueryLedger::charge() {
  if (!budget_) {
    count_.fetch_add(1, std::memory_order_relaxed);
    return;
  }
  std::uint64_t current = count_.load(std::memory_order_relaxed);
  do {
    if (current >= *budget_) throw BudgetExceededError(current);
  } while (!count_.compare_exchange_weak(current, current + 1,
                                         std::memory_order_relaxed));
}

std::optional<std::uint64_t> QueryLedger::remaining() const {
  if (!budget_) return std::nullopt;
  const std::uint64_t used = count();
  return used >= *budget_ ? 0 : *budget_ - used;
}

VerificationOracle::VerificationOracle(
    std::shared_ptr<const FeatureExtractor> extractor,
    EnrolledTemplate enrolled, std::optional<std::uint64_t> budget)
    : extractor_(std::move(extractor)),
      enrolled_(std::move(enrolled)),
      ledger_(budget) {
  if (!extractor_) throw std::invalid_argument("oracle needs an extractor");
  if (enrolled_.feature.dim() != extractor_->feature_dim())
    throw DimensionMismatchError("template dimension does not match extractor");
}

SimilarityScore VerificationOracle::query_score(const Waveform& w) {
  if (w.size() != extractor_->input_dim())
    throw DimensionMismatchError("oracle expects " +
                                 std::to_string(extractor_->input_dim()) +
                                 " samples");
  ledger_.charge();
  return cosine(extractor_->extract(w), enrolled_.feature);
}

bool VerificationOracle::verify(const Waveform& w, double tau) {
  return query_score(w).value() >= tau;
}

SimilarityScore score_against(const FeatureExtractor& extractor,
                              const EnrolledTemplate& enrolled,
                              const Waveform& w) {
  return cosine(extractor.extract(w), enrolled.feature);
}

}  // namespace scoreprobe
