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

#include "scoreprobe/random.hpp"

namespace scoreprobe {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t));
  return h;
}

Eigen::VectorXd RandomStream::gaussian_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
  return v;
}

Eigen::MatrixXd RandomStream::gaussian_matrix(Eigen::Index rows,
                                              Eigen::Index cols) {
  // Row-major fill order so a matrix and its rows drawn one by one agree.
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = gaussian();
  return m;
}

}  // namespace scoreprobe
