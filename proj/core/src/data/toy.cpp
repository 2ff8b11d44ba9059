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

#include "jnf/data/toy.hpp"

#include <cmath>

#include "jnf/error.hpp"
#include "jnf/random.hpp"

namespace jnflow::data {

void ToyConfig::validate() const {
  if (image_side < 4) throw Error(ErrorCode::invalid_config, "toy: image_side must be >= 4");
  if (!(size_min > 0 && size_min <= size_max && 2 * size_max < image_side)) {
    throw Error(ErrorCode::invalid_config, "toy: need 0 < size_min <= size_max < image_side/2");
  }
  if (outline_thickness < 1) throw Error(ErrorCode::invalid_config, "toy: outline_thickness must be >= 1");
  if (!(fill_probability >= 0.0 && fill_probability <= 1.0)) {
    throw Error(ErrorCode::invalid_config, "toy: fill_probability must lie in [0,1]");
  }
  if (n_samples < 1) throw Error(ErrorCode::invalid_config, "toy: n_samples must be positive");
  if (shared_bits != 1 && shared_bits != 2) throw Error(ErrorCode::invalid_config, "toy: shared_bits must be 1 or 2");
}

namespace {

double centre(int side) { return 0.5 * (side - 1); }

}  // namespace

RowVector draw_square(int side, int half_side, bool filled, int thickness) {
  RowVector img = RowVector::Zero(side * side);
  const double c = centre(side);
  for (int r = 0; r < side; ++r) {
    for (int col = 0; col < side; ++col) {
      const double d = std::max(std::abs(r - c), std::abs(col - c));
      const bool inside = d <= half_side;
      const bool on = filled ? inside : (inside && d > half_side - thickness);
      if (on) img(r * side + col) = 1.0;
    }
  }
  return img;
}

RowVector draw_circle(int side, int radius, bool filled, int thickness) {
  RowVector img = RowVector::Zero(side * side);
  const double c = centre(side);
  for (int r = 0; r < side; ++r) {
    for (int col = 0; col < side; ++col) {
      const double d = std::hypot(r - c, col - c);
      const bool inside = d <= radius;
      const bool on = filled ? inside : (inside && d > radius - thickness);
      if (on) img(r * side + col) = 1.0;
    }
  }
  return img;
}

namespace {

void add_frame(RowVector& img, int side) {
  for (int k = 0; k < side; ++k) {
    img(k) = 1.0;
    img((side - 1) * side + k) = 1.0;
    img(k * side) = 1.0;
    img(k * side + side - 1) = 1.0;
  }
}

}  // namespace

MultimodalDataset generate_toy_dataset(const ToyConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int side = cfg.image_side;
  const int n = cfg.n_samples;
  Matrix squares(n, side * side);
  Matrix circles(n, side * side);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<double> fill(n), frame(n), sq_size(n), circ_size(n);

  for (int i = 0; i < n; ++i) {
    const bool full = rng.bernoulli(cfg.fill_probability);
    const int h = static_cast<int>(rng.uniform_int(cfg.size_min, cfg.size_max));
    const int r = static_cast<int>(rng.uniform_int(cfg.size_min, cfg.size_max));
    const bool framed = cfg.shared_bits == 2 && rng.bernoulli(0.5);
    RowVector sq = draw_square(side, h, full, cfg.outline_thickness);
    RowVector ci = draw_circle(side, r, full, cfg.outline_thickness);
    if (framed) {
      add_frame(sq, side);
      add_frame(ci, side);
    }
    squares.row(i) = sq;
    circles.row(i) = ci;
    labels[i] = (full ? 1 : 0) + (framed ? 2 : 0);
    fill[i] = full ? 1.0 : 0.0;
    frame[i] = framed ? 1.0 : 0.0;
    sq_size[i] = h;
    circ_size[i] = r;
  }

  std::vector<ModalitySpec> specs{{"squares", {1, side, side}, LikelihoodFamily::bernoulli},
                                  {"circles", {1, side, side}, LikelihoodFamily::bernoulli}};
  MultimodalDataset ds(std::move(specs), {std::move(squares), std::move(circles)}, std::move(labels));
  ds.set_annotation("fill", std::move(fill));
  ds.set_annotation("frame", std::move(frame));
  ds.set_annotation("square_size", std::move(sq_size));
  ds.set_annotation("circle_size", std::move(circ_size));
  return ds;
}

}  // namespace jnflow::data
