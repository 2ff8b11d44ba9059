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

#include "jnf/data/batching.hpp"

#include <algorithm>
#include <numeric>

#include "jnf/error.hpp"
#include "jnf/random.hpp"

namespace jnflow::data {

BatchIterator::BatchIterator(std::size_t n, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed)
    : n_(n), batch_size_(batch_size), seed_(shuffle_seed) {
  if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch_size must be >= 1");
}

std::vector<std::size_t> BatchIterator::order(std::size_t epoch) const {
  if (seed_) {
    Rng rng = Rng::derive(*seed_, epoch);
    return rng.permutation(n_);
  }
  std::vector<std::size_t> idx(n_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch(std::size_t epoch) const {
  const auto idx = order(epoch);
  std::vector<std::vector<std::size_t>> out;
  out.reserve(batches_per_epoch());
  for (std::size_t start = 0; start < n_; start += batch_size_) {
    const std::size_t end = std::min(n_, start + batch_size_);
    out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

}  // namespace jnflow::data
