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

#ifndef JNF_DATA_TOY_HPP_
#define JNF_DATA_TOY_HPP_

#include <cstdint>

#include "jnf/data/dataset.hpp"

namespace jnflow::data {

/// Bimodal squares/circles data.  Both images of a pair share the filled vs
/// outlined attribute; square half-side and circle radius are independent.
/// With shared_bits == 2 a one-pixel border frame is a second shared bit.
struct ToyConfig {
  int image_side = 32;
  int size_min = 3;
  int size_max = 13;
  int outline_thickness = 1;
  double fill_probability = 0.5;
  int n_samples = 4096;
  std::uint64_t seed = 0;
  int shared_bits = 1;

  void validate() const;
};

/// Labels: fill (1 = full) + 2 * frame.  Annotations: "fill", "frame",
/// "square_size", "circle_size".
MultimodalDataset generate_toy_dataset(const ToyConfig& cfg);

/// Pixel mask of one shape (row-major side x side), exposed for tests.
RowVector draw_square(int side, int half_side, bool filled, int thickness);
RowVector draw_circle(int side, int radius, bool filled, int thickness);

}  // namespace jnflow::data

#endif  // JNF_DATA_TOY_HPP_
