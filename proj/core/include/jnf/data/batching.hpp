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

#ifndef JNF_DATA_BATCHING_HPP_
#define JNF_DATA_BATCHING_HPP_

#include <cstdint>
#include <optional>
#include <vector>

namespace jnflow::data {

/// Splits [0, n) into batches.  With a shuffle seed, epoch e uses the
/// permutation drawn from the stream derived from (seed, e); without one,
/// storage order.  The final partial batch is kept.
class BatchIterator {
 public:
  BatchIterator(std::size_t n, std::size_t batch_size, std::optional<std::uint64_t> shuffle_seed = std::nullopt);

  std::vector<std::size_t> order(std::size_t epoch) const;
  std::vector<std::vector<std::size_t>> epoch(std::size_t epoch) const;
  std::size_t batches_per_epoch() const { return (n_ + batch_size_ - 1) / batch_size_; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::size_t batch_size_;
  std::optional<std::uint64_t> seed_;
};

}  // namespace jnflow::data

#endif  // JNF_DATA_BATCHING_HPP_
