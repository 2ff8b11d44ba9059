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

#include "jnf/experiment/render.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>

#include "jnf/experiment/plot.hpp"
#include "jnf/random.hpp"

namespace jnflow::experiment {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s + " " : s + std::string(w - s.size(), ' '); }

std::set<std::string> directions(const eval::EvalReport& r) {
  std::set<std::string> keys;
  for (const auto* table : {&r.cond_ll, &r.coherence, &r.fid})
    for (const auto& [k, v] : *table) keys.insert(k);
  return keys;
}

std::string metrics_tables(const RunRecord& rec, const std::vector<std::string>& notes) {
  std::ostringstream out;
  out << "run: " << rec.run_dir.string() << "\n";
  out << "config hash: " << hex(rec.config_hash) << "\n";
  out << "variant: " << to_string(rec.config.variant) << ", latent_dim " << rec.config.latent_dim << ", seed "
      << rec.config.seed << "\n\n";
  out << "stage timings\n";
  for (const auto& t : rec.timings) {
    out << "  " << pad(t.stage, 12) << fmt(t.seconds) << " s" << (t.resumed ? " (resumed)" : "") << "\n";
  }
  out << "\n";
  const auto& r = rec.report;
  if (r.empty()) {
    out << "metrics: evaluation not run\n";
  } else {
    out << "metrics (model " << r.model_id << ", dataset " << r.dataset_id << ", n_is " << r.n_is << ", n_mc "
        << r.n_mc << ")\n";
    if (r.joint_ll) out << "  joint log-likelihood: " << fmt(*r.joint_ll) << "\n";
    if (r.vi_bound_violation_rate) out << "  VI bound violation rate: " << fmt(*r.vi_bound_violation_rate) << "\n";
    out << "\n  " << pad("target|source", 28) << pad("cond_ll", 14) << pad("coherence", 12) << "fid\n";
    for (const auto& k : directions(r)) {
      auto cell = [&](const std::map<std::string, double>& t) {
        auto it = t.find(k);
        return it == t.end() ? std::string("-") : fmt(it->second);
      };
      out << "  " << pad(k, 28) << pad(cell(r.cond_ll), 14) << pad(cell(r.coherence), 12) << cell(r.fid) << "\n";
    }
    if (!r.metadata.empty()) {
      out << "\nmetadata\n";
      for (const auto& [k, v] : r.metadata) out << "  " << k << " = " << v << "\n";
    }
  }
  if (!notes.empty()) {
    out << "\nnotes\n";
    for (const auto& n : notes) out << "  - " << n << "\n";
  }
  return out.str();
}

struct Bounds {
  double x_min, x_max, y_min, y_max;
};

Bounds bounds_of(const Matrix& z) {
  double x0 = z.col(0).minCoeff(), x1 = z.col(0).maxCoeff();
  double y0 = z.col(1).minCoeff(), y1 = z.col(1).maxCoeff();
  const double mx = std::max(0.5, 0.15 * (x1 - x0)), my = std::max(0.5, 0.15 * (y1 - y0));
  return {x0 - mx, x1 + mx, y0 - my, y1 + my};
}

Axes axes_for(const Bounds& b) {
  Axes ax;
  ax.x_min = b.x_min;
  ax.x_max = b.x_max;
  ax.y_min = b.y_min;
  ax.y_max = b.y_max;
  ax.width = 420;
  ax.height = 420;
  return ax;
}

// Class colour, lightened for small "square_size" values when available.
std::vector<Rgb> point_colors(const data::MultimodalDataset& ds, std::size_t n) {
  std::vector<Rgb> out(n, Rgb{0, 0, 0});
  const bool has_size = ds.annotations().count("square_size") != 0;
  double lo = 0, hi = 1;
  if (has_size) {
    const auto& s = ds.annotation("square_size");
    lo = *std::min_element(s.begin(), s.begin() + static_cast<long>(n));
    hi = *std::max_element(s.begin(), s.begin() + static_cast<long>(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Rgb base = ds.has_labels() ? category_color(ds.label(i)) : Rgb{31, 119, 180};
    const double t = has_size && hi > lo ? (ds.annotation("square_size")[i] - lo) / (hi - lo) : 1.0;
    out[i] = blend(Rgb{235, 235, 235}, base, 0.25 + 0.75 * t);
  }
  return out;
}

void draw_points(Canvas& c, const Axes& ax, const Matrix& z, const std::vector<Rgb>& colors, int radius) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) c.dot(ax.px(z(i, 0)), ax.py(z(i, 1)), radius, colors[static_cast<std::size_t>(i)]);
}

Canvas density_heatmap(const flow::FlowStack& q, const RowVector& conditioning, const Axes& ax, int res) {
  Matrix grid(res * res, 2);
  for (int j = 0; j < res; ++j)
    for (int i = 0; i < res; ++i)
      grid.row(j * res + i) << ax.x_min + (i + 0.5) * (ax.x_max - ax.x_min) / res,
          ax.y_max - (j + 0.5) * (ax.y_max - ax.y_min) / res;
  const Matrix input = conditioning.replicate(res * res, 1);
  const Matrix lq = q.log_density(ad::constant(grid), ad::constant(input)).value();
  const double mx = lq.maxCoeff();
  Canvas c(ax.width, ax.height);
  const double cw = (ax.width - 2.0 * ax.margin) / res, ch = (ax.height - 2.0 * ax.margin) / res;
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      const double p = std::exp(lq(j * res + i, 0) - mx);
      const int x0 = ax.margin + static_cast<int>(std::floor(i * cw));
      const int y0 = ax.margin + static_cast<int>(std::floor(j * ch));
      c.fill_rect(x0, y0, ax.margin + static_cast<int>(std::floor((i + 1) * cw)),
                  ax.margin + static_cast<int>(std::floor((j + 1) * ch)), viridis(p));
    }
  }
  ax.draw_frame(c);
  return c;
}

Canvas generation_grid(const std::vector<Canvas>& sources, const std::vector<std::vector<Canvas>>& generated) {
  int cw = 0, chh = 0;
  for (const auto& s : sources) cw = std::max(cw, s.width()), chh = std::max(chh, s.height());
  for (const auto& row : generated)
    for (const auto& g : row) cw = std::max(cw, g.width()), chh = std::max(chh, g.height());
  const int gap = 4;
  const int cols = static_cast<int>(sources.size());
  const int rows = 1 + static_cast<int>(generated.size());
  // Extra gap below the source row.
  Canvas c(cols * (cw + gap) + gap, rows * (chh + gap) + 3 * gap, Rgb{255, 255, 255});
  for (int i = 0; i < cols; ++i) c.blit(sources[static_cast<std::size_t>(i)], gap + i * (cw + gap), gap);
  c.fill_rect(0, chh + 2 * gap, c.width(), chh + 2 * gap + 1, Rgb{200, 0, 0});
  for (std::size_t r = 0; r < generated.size(); ++r)
    for (int i = 0; i < cols; ++i)
      c.blit(generated[r][static_cast<std::size_t>(i)], gap + i * (cw + gap),
             3 * gap + static_cast<int>(r + 1) * (chh + gap));
  return c;
}

int pixel_scale(const data::ModalitySpec& spec) {
  if (spec.shape.size() == 3) return std::max(1, 64 / std::max(spec.shape[1], spec.shape[2]));
  return std::max(2, 256 / std::max(1, spec.shape[0]));
}

}  // namespace

std::vector<fs::path> render_report(const RunRecord& rec, const fs::path& out_dir) {
  std::vector<fs::path> files;
  std::vector<std::string> notes;
  const fs::path plots = out_dir / "plots";

  for (const auto& [stage, curve] : rec.loss_curves) {
    if (curve.empty()) continue;
    const fs::path p = plots / ("loss_" + stage + ".png");
    line_chart({curve}).save_png(p);
    files.push_back(p);
    notes.push_back("loss_" + stage + ".png: " + std::to_string(curve.size()) + " epochs, final loss " +
                    fmt(curve.back()));
  }

  const bool have_joint = fs::exists(checkpoint_dir(rec.run_dir, Stage::joint) / "model" / "manifest.txt");
  const bool have_post = fs::exists(checkpoint_dir(rec.run_dir, Stage::posteriors) / "stage.txt");
  if (!have_joint) {
    notes.push_back("latent plots skipped: no joint checkpoint");
  } else {
    try {
      const Splits splits = load_splits(rec.config);
      const auto joint = vae::JointModel::load(checkpoint_dir(rec.run_dir, Stage::joint) / "model");
      const std::size_t n = std::min<std::size_t>(100, splits.train.size());
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
      const auto batch = splits.train.gather(rows);
      const Matrix z = joint.encode(batch).mean.value();
      const auto colors = point_colors(splits.train, n);
      const Bounds b = bounds_of(z.leftCols(std::min<Eigen::Index>(2, z.cols())).cols() == 2 ? z.leftCols(2)
                                                                                            : Matrix(z.rows(), 2));
      const Axes ax = axes_for(b);
      if (z.cols() >= 2) {
        Canvas sc(ax.width, ax.height);
        ax.draw_frame(sc);
        draw_points(sc, ax, z.leftCols(2), colors, 3);
        const fs::path p = plots / "latent_scatter.png";
        sc.save_png(p);
        files.push_back(p);
        notes.push_back("latent_scatter.png: joint-encoder means of " + std::to_string(n) +
                        " training pairs; colour = class, intensity = square size; z range [" + fmt(b.x_min) + ", " +
                        fmt(b.x_max) + "] x [" + fmt(b.y_min) + ", " + fmt(b.y_max) + "]" +
                        (z.cols() > 2 ? " (first two coordinates)" : ""));
      }

      if (have_post) {
        const TrainedModels models = load_models(rec.run_dir, false);
        const std::size_t nm = models.joint.num_modalities();
        if (rec.config.latent_dim != 2) {
          notes.push_back("density heatmaps skipped: latent_dim = " + std::to_string(rec.config.latent_dim) +
                          " (only drawn for 2)");
        } else {
          for (std::size_t i = 0; i < nm; ++i) {
            const Matrix c = flow::conditioning_input(models.posteriors, i, batch[i].topRows(1), models.dcca_ptr());
            Canvas h = density_heatmap(models.posteriors.posterior(i), c.row(0), ax, 120);
            draw_points(h, ax, z, colors, 2);
            h.dot(ax.px(z(0, 0)), ax.py(z(0, 1)), 5, Rgb{255, 255, 255});
            const fs::path p = plots / ("density_" + splits.train.spec(i).name + ".png");
            h.save_png(p);
            files.push_back(p);
            notes.push_back(p.filename().string() + ": q(z | " + splits.train.spec(i).name +
                            ") of training pair 0 (white dot = its joint embedding), scatter overlaid");
          }
        }
        Rng rng(mix_seed(rec.config.seed, 500));
        const auto ncols = std::min<std::size_t>(kGridColumns, splits.test.size());
        for (std::size_t t = 0; t < nm; ++t) {
          for (std::size_t s = 0; s < nm; ++s) {
            if (s == t) continue;
            const Matrix src = splits.test.modality(s).topRows(static_cast<Eigen::Index>(ncols));
            std::vector<Canvas> top;
            for (Eigen::Index i = 0; i < src.rows(); ++i)
              top.push_back(render_sample(src.row(i), splits.test.spec(s), pixel_scale(splits.test.spec(s))));
            std::vector<std::vector<Canvas>> gen;
            for (int r = 0; r < kGridGeneratedRows; ++r) {
              const Matrix g = cross_generate(models, t, s, src, rec.config.eval.likelihood_samples, rng);
              std::vector<Canvas> row;
              for (Eigen::Index i = 0; i < g.rows(); ++i)
                row.push_back(render_sample(g.row(i), splits.test.spec(t), pixel_scale(splits.test.spec(t))));
              gen.push_back(std::move(row));
            }
            const fs::path p =
                plots / ("generation_" + splits.test.spec(t).name + "_from_" + splits.test.spec(s).name + ".png");
            generation_grid(top, gen).save_png(p);
            files.push_back(p);
            notes.push_back(p.filename().string() + ": first row = test " + splits.test.spec(s).name +
                            " samples conditioned on; the following " + std::to_string(kGridGeneratedRows) +
                            " rows are generated " + splits.test.spec(t).name + " samples");
          }
        }
      } else {
        notes.push_back("density heatmaps and generation grids skipped: no posterior checkpoint");
      }
    } catch (const std::exception& e) {
      spdlog::warn("report plots incomplete: {}", e.what());
      notes.push_back(std::string("plots incomplete: ") + e.what());
    }
  }

  const fs::path tables = out_dir / "metrics" / "tables.txt";
  io::write_text(tables, metrics_tables(rec, notes));
  files.insert(files.begin(), tables);
  return files;
}

void write_sweep_outputs(SweepAxis axis, const std::vector<SweepRow>& rows, const fs::path& out_dir) {
  std::set<std::string> keys;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.report.coherence) keys.insert(k);
    for (const auto& [k, v] : r.report.fid) keys.insert(k);
  }
  std::ostringstream out;
  out << pad(to_string(axis), 12);
  for (const auto& k : keys) out << pad("coh:" + k, 30);
  for (const auto& k : keys) out << pad("fid:" + k, 30);
  out << "\n";
  std::map<std::string, std::vector<double>> coh, fid;
  for (const auto& r : rows) {
    out << pad(std::to_string(r.value), 12);
    for (const auto& k : keys) {
      auto it = r.report.coherence.find(k);
      out << pad(it == r.report.coherence.end() ? "-" : fmt(it->second), 30);
      if (it != r.report.coherence.end()) coh[k].push_back(it->second);
    }
    for (const auto& k : keys) {
      auto it = r.report.fid.find(k);
      out << pad(it == r.report.fid.end() ? "-" : fmt(it->second), 30);
      if (it != r.report.fid.end()) fid[k].push_back(it->second);
    }
    out << "\n";
  }
  io::write_text(out_dir / "sweep.txt", out.str());
  std::vector<std::vector<double>> cs, fs_;
  for (auto& [k, v] : coh) cs.push_back(v);
  for (auto& [k, v] : fid) fs_.push_back(v);
  if (!cs.empty()) line_chart(cs).save_png(out_dir / "plots" / ("sweep_coherence_" + std::string(to_string(axis)) + ".png"));
  if (!fs_.empty()) line_chart(fs_).save_png(out_dir / "plots" / ("sweep_fid_" + std::string(to_string(axis)) + ".png"));
}

}  // namespace jnflow::experiment
