// Copyright 2026 The JNF Authors.
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

#ifndef JNF_RANDOM_HPP_
#define JNF_RANDOM_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "jnf/autodiff.hpp"

namespace jnflow {

/// Seeded random source.  All stochastic code takes an Rng& so that runs are
/// reproducible from a single integer seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream derived from (seed, stream) by a SplitMix64 mix.
  static Rng derive(std::uint64_t seed, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }
  bool bernoulli(double p) { return uniform() < p; }

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);
  Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi);
  std::vector<std::size_t> permutation(std::size_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace jnflow

#endif  // JNF_RANDOM_HPP_
