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

#include "jnf/experiment/plot.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "jnf/error.hpp"

namespace jnflow::experiment {

Canvas::Canvas(int width, int height, Rgb background)
    : width_(width), height_(height), pixels_(static_cast<std::size_t>(width) * height * 3) {
  if (width < 1 || height < 1) throw Error(ErrorCode::invalid_argument, "canvas size must be positive");
  fill_rect(0, 0, width, height, background);
}

Rgb Canvas::at(int x, int y) const {
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Canvas::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
  const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
  pixels_[i] = c[0];
  pixels_[i + 1] = c[1];
  pixels_[i + 2] = c[2];
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
  for (int y = std::max(0, y0); y < std::min(height_, y1); ++y)
    for (int x = std::max(0, x0); x < std::min(width_, x1); ++x) set(x, y, c);
}

void Canvas::line(double x0, double y0, double x1, double y1, Rgb c) {
  const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
  const int steps = std::max(1, static_cast<int>(std::ceil(len)));
  for (int k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / steps;
    set(static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
  }
}

void Canvas::dot(double x, double y, int radius, Rgb c) {
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) set(cx + dx, cy + dy, c);
}

void Canvas::blit(const Canvas& other, int x, int y) {
  for (int j = 0; j < other.height(); ++j)
    for (int i = 0; i < other.width(); ++i) set(x + i, y + j, other.at(i, j));
}

void Canvas::save_png(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_error, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::io_error, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height_; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels_.data() + static_cast<std::size_t>(y) * width_ * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Rgb viridis(double t) {
  // Piecewise-linear through eight samples of the viridis map.
  static const std::array<Rgb, 8> stops{{{68, 1, 84},
                                         {70, 50, 127},
                                         {54, 92, 141},
                                         {39, 127, 142},
                                         {31, 161, 135},
                                         {74, 194, 109},
                                         {159, 218, 58},
                                         {253, 231, 37}}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), stops.size() - 2);
  return blend(stops[i], stops[i + 1], t - static_cast<double>(i));
}

Rgb category_color(int k) {
  static const std::array<Rgb, 8> palette{{{31, 119, 180},
                                           {214, 39, 40},
                                           {44, 160, 44},
                                           {255, 127, 14},
                                           {148, 103, 189},
                                           {140, 86, 75},
                                           {227, 119, 194},
                                           {127, 127, 127}}};
  return palette[static_cast<std::size_t>(std::abs(k)) % palette.size()];
}

Rgb blend(Rgb a, Rgb b, double t) {
  Rgb out;
  for (int i = 0; i < 3; ++i) out[i] = static_cast<std::uint8_t>(std::lround(a[i] + t * (b[i] - a[i])));
  return out;
}

double Axes::px(double x) const {
  return margin + (x - x_min) / (x_max - x_min) * (width - 2 * margin);
}

double Axes::py(double y) const {
  return height - margin - (y - y_min) / (y_max - y_min) * (height - 2 * margin);
}

void Axes::draw_frame(Canvas& c) const {
  const Rgb grey{160, 160, 160};
  const Rgb black{0, 0, 0};
  if (x_min < 0 && x_max > 0) c.line(px(0), margin, px(0), height - margin, grey);
  if (y_min < 0 && y_max > 0) c.line(margin, py(0), width - margin, py(0), grey);
  c.line(margin, margin, width - margin, margin, black);
  c.line(margin, height - margin, width - margin, height - margin, black);
  c.line(margin, margin, margin, height - margin, black);
  c.line(width - margin, margin, width - margin, height - margin, black);
}

Canvas line_chart(const std::vector<std::vector<double>>& series, bool normalize) {
  Axes ax;
  std::size_t longest = 1;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& s : series) {
    longest = std::max(longest, s.size());
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  ax.x_min = 0.0;
  ax.x_max = std::max<double>(1.0, static_cast<double>(longest - 1));
  ax.y_min = normalize ? 0.0 : lo;
  ax.y_max = normalize ? 1.0 : hi;
  Canvas c(ax.width, ax.height);
  ax.draw_frame(c);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    double slo = lo, shi = hi;
    if (normalize && !s.empty()) {
      slo = *std::min_element(s.begin(), s.end());
      shi = *std::max_element(s.begin(), s.end());
      if (shi - slo < 1e-12) shi = slo + 1.0;
    }
    auto y = [&](double v) { return normalize ? (v - slo) / (shi - slo) : v; };
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i > 0) c.line(ax.px(i - 1.0), ax.py(y(s[i - 1])), ax.px(static_cast<double>(i)), ax.py(y(s[i])), category_color(static_cast<int>(k)));
      if (s.size() <= 40) c.dot(ax.px(static_cast<double>(i)), ax.py(y(s[i])), 2, category_color(static_cast<int>(k)));
    }
  }
  return c;
}

Canvas render_sample(const RowVector& x, const data::ModalitySpec& spec, int scale) {
  auto level = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
  if (spec.shape.size() == 3) {
    const int ch = spec.shape[0], h = spec.shape[1], w = spec.shape[2];
    Canvas c(w * scale, h * scale);
    for (int yy = 0; yy < h; ++yy) {
      for (int xx = 0; xx < w; ++xx) {
        Rgb px;
        for (int k = 0; k < 3; ++k) {
          const int src = ch == 3 ? k : 0;
          px[k] = level(x(static_cast<Eigen::Index>(src) * h * w + yy * w + xx));
        }
        c.fill_rect(xx * scale, yy * scale, (xx + 1) * scale, (yy + 1) * scale, px);
      }
    }
    return c;
  }
  const auto n = static_cast<int>(x.size());
  Canvas c(n * scale, scale);
  for (int i = 0; i < n; ++i) {
    const auto g = level(x(i));
    c.fill_rect(i * scale, 0, (i + 1) * scale, scale, {g, g, g});
  }
  return c;
}

}  // namespace jnflow::experiment
