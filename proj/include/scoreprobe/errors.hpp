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
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace scoreprobe {

// Zero-norm vectors, all-singular matrices and similar inputs that have no
// meaningful answer.
class DegenerateInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(std::uint64_t final_count)
      : std::runtime_error("query budget exhausted after " +
                           std::to_string(final_count) + " queries"),
        final_count_(final_count) {}
  std::uint64_t final_count() const noexcept { return final_count_; }

 private:
  std::uint64_t final_count_;
};

class UndefinedCorrelationError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class InfeasibleDeltaError : public std::runtime_error {
 public:
  InfeasibleDeltaError(std::size_t found, std::size_t requested, double delta)
      : std::runtime_error("delta-orthogonal set infeasible: found " +
                           std::to_string(found) + " of " +
                           std::to_string(requested) +
                           " members at delta=" + std::to_string(delta)),
        found_(found) {}
  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t found_;
};

class DegenerateRecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace scoreprobe
