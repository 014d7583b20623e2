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

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace scoreprobe {

// splitmix64 finalizer; mixes a master seed with a list of stream tags so
// that every trial, world component and victim gets an independent stream.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> tags);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  double gaussian() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  Eigen::VectorXd gaussian_vector(Eigen::Index n);
  Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace scoreprobe
