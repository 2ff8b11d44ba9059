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

#ifndef JNF_EXPERIMENT_PLOT_HPP_
#define JNF_EXPERIMENT_PLOT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jnf/autodiff.hpp"
#include "jnf/data/dataset.hpp"

// Minimal raster plotting: RGB canvases written as PNG.  Plots carry no text;
// titles and axis ranges go into the accompanying text report.
namespace jnflow::experiment {

using Rgb = std::array<std::uint8_t, 3>;

class Canvas {
 public:
  Canvas(int width, int height, Rgb background = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);
  void fill_rect(int x0, int y0, int x1, int y1, Rgb c);
  void line(double x0, double y0, double x1, double y1, Rgb c);
  void dot(double x, double y, int radius, Rgb c);
  /// Copies `other` with its top-left corner at (x, y).
  void blit(const Canvas& other, int x, int y);
  void save_png(const std::filesystem::path& path) const;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// Perceptually ordered colormap on [0, 1].
Rgb viridis(double t);
/// Distinct colour for a class index.
Rgb category_color(int k);
Rgb blend(Rgb a, Rgb b, double t);

/// Maps data coordinates to pixels inside a margin.
struct Axes {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  int width = 480, height = 360, margin = 30;

  double px(double x) const;
  double py(double y) const;
  /// Draws the frame and zero lines.
  void draw_frame(Canvas& c) const;
};

/// One polyline per series, each normalized to its own range when
/// `normalize` is set.
Canvas line_chart(const std::vector<std::vector<double>>& series, bool normalize = false);

/// Renders one modality row as an image: (C, H, W) shapes become grey or RGB
/// tiles, flat vectors a one-row strip.  Values are clamped to [0, 1].
Canvas render_sample(const RowVector& x, const data::ModalitySpec& spec, int scale);

}  // namespace jnflow::experiment

#endif  // JNF_EXPERIMENT_PLOT_HPP_
