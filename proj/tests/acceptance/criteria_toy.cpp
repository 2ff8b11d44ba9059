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

#include <chrono>
#include <fstream>
#include <sstream>

#include "acceptance/criteria.hpp"
#include "acceptance/toy_setup.hpp"
#include "jnf/eval/estimators.hpp"
#include "jnf/experiment/pipeline.hpp"
#include "jnf/io/archive.hpp"

namespace jnflow::acceptance {

namespace {

namespace fs = std::filesystem;
using experiment::Stage;

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

const std::vector<std::uint64_t> kSeeds{0, 1, 2};

fs::path toy_dir(const Context& ctx) { return ctx.work_dir / "toy"; }

fs::path seed_dir(const fs::path& root, std::uint64_t seed) { return root / ("seed_" + std::to_string(seed)); }

fs::path jnf_run(const fs::path& seed_root) { return seed_root / ("flow_depth_" + std::to_string(kToyFlowBlocks)); }

// JNF and its Gaussian counterpart (n_blocks = 0) sharing one step-1 run.
std::vector<experiment::SweepRow> train_pair(std::uint64_t seed, const fs::path& out) {
  return experiment::ablation_sweep(toy_config(seed), experiment::SweepAxis::flow_depth, {kToyFlowBlocks, 0}, out);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

Outcome criterion_toy_pipeline(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(toy_dir(ctx));
  bool ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    const auto rows = train_pair(seed, seed_dir(toy_dir(ctx), seed));
    const auto& jnf = rows[0].report.coherence;
    const auto& gauss = rows[1].report.coherence;
    bool seed_ok = jnf.size() == 2 && gauss.size() == 2;
    std::string line = "seed " + std::to_string(seed) + ":";
    for (const auto& [dir, c] : jnf) {
      const double g = gauss.count(dir) ? gauss.at(dir) : 1.0;
      seed_ok = seed_ok && c >= 0.90 && c >= g;
      line += " " + dir + " " + num(c, 3) + " vs " + num(g, 3);
    }
    ok = ok && seed_ok;
    detail += (detail.empty() ? "" : "; ") + line + (seed_ok ? "" : " (fails)");
  }
  const double secs = elapsed(t0);
  if (secs >= 1200.0) {
    ok = false;
    detail += "; runtime above 1200 s";
  }
  return {ok, "JNF vs Gaussian coherence (target|source), need JNF >= 0.90 and >= Gaussian: " + detail};
}

Outcome criterion_vi_bound(const Context& ctx) {
  const fs::path run = jnf_run(seed_dir(toy_dir(ctx), 0));
  std::string note;
  if (!fs::exists(experiment::report_path(run))) {
    train_pair(0, seed_dir(toy_dir(ctx), 0));
    note = " (trained the seed-0 toy model first)";
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = experiment::ExperimentConfig::load(run / "config.txt");
  const auto splits = experiment::load_splits(cfg);
  const auto models = experiment::load_models(run, false);
  const int n_pairs = 200;
  std::vector<std::size_t> rows(n_pairs);
  for (int i = 0; i < n_pairs; ++i) rows[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
  const auto xs = splits.test.gather(rows);
  const auto cs = flow::conditioning_inputs(models.posteriors, xs, models.dcca_ptr());
  Rng rng(mix_seed(cfg.seed, 700));
  int satisfied = 0;
  for (int i = 0; i < n_pairs; ++i) {
    const std::vector<RowVector> x{xs[0].row(i), xs[1].row(i)};
    const std::vector<RowVector> c{cs[0].row(i), cs[1].row(i)};
    satisfied += eval::vi_bound_check(models.joint, models.posteriors, x, c, 1000, rng).satisfied ? 1 : 0;
  }
  const double rate = static_cast<double>(satisfied) / n_pairs;
  const double secs = elapsed(t0);
  const bool ok = rate >= 0.95 && secs < 300.0;
  return {ok, std::to_string(satisfied) + "/" + std::to_string(n_pairs) + " test pairs satisfy the bound (rate " +
                  num(rate, 3) + ", need >= 0.95, n_mc=1000), check took " + num(secs, 3) + " s" + note +
                  (secs < 300.0 ? "" : "; runtime above 300 s")};
}

Outcome criterion_dcca_sweep(const Context& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = ctx.work_dir / "dcca_sweep";
  fs::remove_all(out);
  const int max_dim = 4;
  const auto cfg = two_bit_config(0, max_dim);
  std::vector<int> values;
  for (int d = 1; d <= max_dim; ++d) values.push_back(d);
  const auto rows = experiment::ablation_sweep(cfg, experiment::SweepAxis::dcca_dim, values, out);
  std::vector<double> c;
  std::string curve;
  for (const auto& r : rows) {
    double sum = 0.0;
    for (const auto& [k, v] : r.report.coherence) sum += v;
    c.push_back(r.report.coherence.empty() ? 0.0 : sum / static_cast<double>(r.report.coherence.size()));
    curve += (curve.empty() ? "" : ", ") + std::to_string(r.value) + ":" + num(c.back(), 3);
  }
  // True shared dimension: 2 bits.
  bool ok = c.size() == static_cast<std::size_t>(max_dim) && c[0] <= c[1];
  for (std::size_t d = 2; d < c.size(); ++d) ok = ok && c[d] <= c[1] + 0.02;
  const double secs = elapsed(t0);
  if (secs >= 1800.0) ok = false;
  return {ok, "mean coherence by d_keep {" + curve + "}; need c(1) <= c(2) and c(d) <= c(2) + 0.02 for d > 2" +
                  (secs < 1800.0 ? "" : "; runtime above 1800 s")};
}

Outcome criterion_determinism(const Context& ctx) {
  const fs::path reference = seed_dir(toy_dir(ctx), 0);
  if (!fs::exists(experiment::report_path(jnf_run(reference))) ||
      !fs::exists(experiment::report_path(reference / "flow_depth_0"))) {
    train_pair(0, reference);
  }
  const fs::path rerun = ctx.work_dir / "determinism";
  fs::remove_all(rerun);
  const auto rows = train_pair(0, rerun);
  int metrics = 0, mismatched = 0, files = 0, differing_files = 0;
  for (const auto& r : rows) {
    const fs::path ref_run = reference / r.run_dir.filename();
    const auto ref = eval::EvalReport::parse(io::read_text(experiment::report_path(ref_run)));
    const auto compare = [&](const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
      for (const auto& [k, v] : a) {
        ++metrics;
        if (!b.count(k) || b.at(k) != v) ++mismatched;
      }
      if (a.size() != b.size()) ++mismatched;
    };
    compare(r.report.cond_ll, ref.cond_ll);
    compare(r.report.coherence, ref.coherence);
    compare(r.report.fid, ref.fid);
    ++metrics;
    if (r.report.joint_ll != ref.joint_ll) ++mismatched;
    for (Stage s : {Stage::joint, Stage::posteriors}) {
      const fs::path rel = fs::relative(experiment::checkpoint_dir(r.run_dir, s), r.run_dir) / "model" / "params.bin";
      ++files;
      if (slurp(r.run_dir / rel) != slurp(ref_run / rel)) ++differing_files;
    }
  }
  const bool ok = metrics > 0 && mismatched == 0 && differing_files == 0;
  return {ok, std::to_string(metrics - mismatched) + "/" + std::to_string(metrics) +
                  " metrics identical to the criterion-6 seed-0 run, " + std::to_string(files - differing_files) + "/" +
                  std::to_string(files) + " checkpoint files bitwise identical"};
}

}  // namespace jnflow::acceptance
