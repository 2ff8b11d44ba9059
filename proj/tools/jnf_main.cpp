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

// Command-line front end: one subcommand per pipeline stage plus dataset
// preparation, sampling, sweeps and report rendering.

#include <spdlog/spdlog.h>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "jnf/data/pairing.hpp"
#include "jnf/data/toy.hpp"
#include "jnf/error.hpp"
#include "jnf/experiment/config.hpp"
#include "jnf/experiment/pipeline.hpp"
#include "jnf/experiment/render.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/poe/poe.hpp"
#include "jnf/random.hpp"

namespace fs = std::filesystem;
using namespace jnflow;
using namespace jnflow::experiment;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

struct ConfigArgs {
  std::string config;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.config, "Experiment config (key = value lines)");
  cmd->add_option("--set", a.overrides, "Override one config entry, e.g. --set flow.n_blocks=2");
}

ExperimentConfig build_config(const ConfigArgs& a, const fs::path& run_dir = {}) {
  ExperimentConfig cfg;
  if (!a.config.empty()) {
    cfg = ExperimentConfig::load(a.config);
  } else if (!run_dir.empty() && fs::exists(run_dir / "config.txt")) {
    cfg = ExperimentConfig::load(run_dir / "config.txt");
  }
  if (!a.overrides.empty()) {
    std::string text;
    for (const auto& o : a.overrides) {
      if (o.find('=') == std::string::npos) throw Error(ErrorCode::invalid_config, "--set expects key=value: " + o);
      text += o + "\n";
    }
    cfg.apply(io::Manifest::parse(text));
  }
  cfg.validate();
  return cfg;
}

void print_record(const RunRecord& rec) {
  std::cout << "run " << rec.run_dir.string() << " (config " << hex(rec.config_hash) << ")\n";
  for (const auto& t : rec.timings) {
    std::cout << "  " << t.stage << ": " << (t.resumed ? "resumed" : "done") << " in " << t.seconds << " s\n";
  }
  if (!rec.report.empty()) std::cout << rec.report.to_text();
}

std::vector<int> parse_values(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto dash = item.find('-', 1);
    try {
      if (dash != std::string::npos) {
        const int lo = std::stoi(item.substr(0, dash)), hi = std::stoi(item.substr(dash + 1));
        for (int v = lo; v <= hi; ++v) out.push_back(v);
      } else {
        out.push_back(std::stoi(item));
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::invalid_config, "bad sweep value '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::invalid_config, "--values is empty");
  return out;
}

std::size_t modality_index(const data::MultimodalDataset& ds, const std::string& name) {
  for (std::size_t i = 0; i < ds.num_modalities(); ++i)
    if (ds.spec(i).name == name) return i;
  throw Error(ErrorCode::invalid_argument, "unknown modality '" + name + "'");
}

// Writes samples/<stem>.bin and records its shape and provenance in
// samples/manifest.txt.
void write_samples(const fs::path& run_dir, const std::string& stem, const Matrix& x,
                   const data::ModalitySpec& spec, const std::map<std::string, std::string>& info) {
  const fs::path dir = run_dir / "samples";
  fs::create_directories(dir);
  io::write_matrix(dir / (stem + ".bin"), x);
  io::Manifest m;
  if (fs::exists(dir / "manifest.txt")) m = io::Manifest::load(dir / "manifest.txt");
  m.set(stem + ".file", stem + ".bin");
  m.set(stem + ".rows", static_cast<long long>(x.rows()));
  m.set(stem + ".cols", static_cast<long long>(x.cols()));
  m.set(stem + ".shape", data::format_shape(spec.shape));
  m.set(stem + ".dtype", "float64");
  for (const auto& [k, v] : info) m.set(stem + "." + k, v);
  m.save(dir / "manifest.txt");
  std::cout << "wrote " << (dir / (stem + ".bin")).string() << " (" << x.rows() << " x " << x.cols() << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates and frees many large temporaries; keep them in the
  // heap instead of returning them to the kernel on every free.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Joint normalizing-flow multimodal VAE experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // toy-gen
  ConfigArgs toy_args;
  std::string toy_out;
  auto* toy_cmd = app.add_subcommand("toy-gen", "Generate the paired square/circle toy dataset");
  add_config_options(toy_cmd, toy_args);
  toy_cmd->add_option("-o,--out", toy_out, "Output dataset directory")->required();

  // ingest
  std::vector<std::string> ingest_dirs;
  std::string ingest_out;
  int matches = 1;
  std::uint64_t ingest_seed = 0;
  std::size_t max_per_class = 0;
  auto* ingest_cmd = app.add_subcommand("ingest", "Pair labelled single-modality datasets into a multimodal one");
  ingest_cmd->add_option("-m,--modality", ingest_dirs, "Labelled dataset directory (repeat per modality)")
      ->required()
      ->check(CLI::ExistingDirectory);
  ingest_cmd->add_option("--matches-per-item", matches, "Pairings each item takes part in");
  ingest_cmd->add_option("--seed", ingest_seed, "Pairing seed");
  ingest_cmd->add_option("--max-per-class", max_per_class, "Cap on items per class (0 = no cap)");
  ingest_cmd->add_option("-o,--out", ingest_out, "Output dataset directory")->required();

  // stage commands
  struct StageCommand {
    const char* name;
    const char* help;
    Stage until;
    CLI::App* cmd = nullptr;
  };
  std::vector<StageCommand> stages{{"train-joint", "Train the joint VAE (step 1)", Stage::joint},
                                   {"train-dcca", "Train the DCCA projections", Stage::dcca},
                                   {"train-posteriors", "Train the unimodal posteriors (step 2)", Stage::posteriors},
                                   {"train-classifiers", "Train the coherence classifiers", Stage::classifiers},
                                   {"eval", "Run every stage and evaluate", Stage::eval}};
  ConfigArgs stage_args;
  std::string run_dir;
  for (auto& s : stages) {
    s.cmd = app.add_subcommand(s.name, s.help);
    add_config_options(s.cmd, stage_args);
    s.cmd->add_option("-r,--run", run_dir, "Run directory")->required();
  }

  // sample
  std::string sample_run, sample_target, sample_source;
  int sample_n = 16;
  std::uint64_t sample_seed = 0;
  bool sample_likelihood = false;
  auto* sample_cmd = app.add_subcommand("sample", "Write conditional or prior generations to <run>/samples");
  sample_cmd->add_option("-r,--run", sample_run, "Trained run directory")->required()->check(CLI::ExistingDirectory);
  sample_cmd->add_option("-t,--target", sample_target, "Modality to generate")->required();
  sample_cmd->add_option("-s,--source", sample_source,
                         "Conditioning modality, comma-separated subset, or 'prior'")
      ->required();
  sample_cmd->add_option("-n,--n", sample_n, "Number of samples (source rows are the first test rows)");
  sample_cmd->add_option("--seed", sample_seed, "Sampling seed");
  sample_cmd->add_flag("--likelihood-samples", sample_likelihood, "Sample the likelihood instead of its mean");

  // sweep
  ConfigArgs sweep_args;
  std::string sweep_axis, sweep_values, sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "Ablation over flow depth or DCCA embedding dimension");
  add_config_options(sweep_cmd, sweep_args);
  sweep_cmd->add_option("-a,--axis", sweep_axis, "flow_depth or dcca_dim")->required();
  sweep_cmd->add_option("-v,--values", sweep_values, "Values, e.g. 1,2,3 or 1-16")->required();
  sweep_cmd->add_option("-o,--out", sweep_out, "Sweep output directory")->required();

  // report
  std::string report_run, report_out;
  auto* report_cmd = app.add_subcommand("report", "Render metrics tables and plots of a run");
  report_cmd->add_option("-r,--run", report_run, "Run directory")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("-o,--out", report_out, "Output directory (default: the run directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*toy_cmd) {
      const auto cfg = build_config(toy_args);
      if (cfg.dataset.kind != DatasetKind::toy) throw Error(ErrorCode::invalid_config, "toy-gen needs dataset.kind=toy");
      const auto ds = data::generate_toy_dataset(cfg.dataset.toy);
      data::save_dataset(toy_out, ds, "toy seed " + std::to_string(cfg.dataset.toy.seed));
      std::cout << "wrote " << ds.size() << " toy pairs to " << toy_out << "\n";
    } else if (*ingest_cmd) {
      std::vector<data::LabeledDataset> parts;
      for (const auto& d : ingest_dirs) parts.push_back(data::load_labeled_dataset(d));
      const auto ds = data::pair_by_label(parts, matches, ingest_seed,
                                          max_per_class ? std::optional<std::size_t>(max_per_class) : std::nullopt);
      data::save_dataset(ingest_out, ds, "ingest seed " + std::to_string(ingest_seed));
      std::cout << "wrote " << ds.size() << " paired samples to " << ingest_out << "\n";
    } else if (*sample_cmd) {
      const auto cfg = ExperimentConfig::load(fs::path(sample_run) / "config.txt");
      const auto splits = load_splits(cfg);
      const auto models = load_models(sample_run, false);
      const std::size_t t = modality_index(splits.test, sample_target);
      Rng rng(sample_seed);
      Matrix out;
      std::string stem = sample_target + "_from_";
      if (sample_source == "prior") {
        out = poe::decode_latents(models.joint, t, rng.normal_matrix(sample_n, models.joint.latent_dim()),
                                  sample_likelihood ? &rng : nullptr);
        stem += "prior";
      } else {
        std::vector<std::size_t> src;
        std::stringstream in(sample_source);
        std::string name;
        while (std::getline(in, name, ',')) src.push_back(modality_index(splits.test, name));
        std::vector<std::size_t> rows;
        for (int i = 0; i < sample_n; ++i) rows.push_back(static_cast<std::size_t>(i) % splits.test.size());
        const auto batch = splits.test.gather(rows);
        if (src.size() == 1) {
          out = cross_generate(models, t, src[0], batch[src[0]], sample_likelihood, rng);
        } else {
          out.resize(sample_n, splits.test.spec(t).dim());
          for (int i = 0; i < sample_n; ++i) {
            poe::PoeTarget target(models.joint.latent_dim());
            for (std::size_t s : src) {
              const Matrix c = flow::conditioning_input(models.posteriors, s, batch[s].row(i), models.dcca_ptr());
              target.add_expert(models.posteriors.posterior(s), c.row(0));
            }
            const auto hc = hmc_config(cfg, mix_seed(sample_seed, static_cast<std::uint64_t>(i)));
            out.row(i) = poe::conditional_generate_subset(models.joint, target, hc, t, 1,
                                                          sample_likelihood ? &rng : nullptr);
          }
        }
        for (std::size_t k = 0; k < src.size(); ++k) stem += (k ? "+" : "") + splits.test.spec(src[k]).name;
      }
      write_samples(sample_run, stem, out, splits.test.spec(t),
                    {{"target", sample_target}, {"source", sample_source}, {"seed", std::to_string(sample_seed)},
                     {"likelihood_samples", sample_likelihood ? "1" : "0"}});
    } else if (*sweep_cmd) {
      const auto cfg = build_config(sweep_args);
      const auto rows = ablation_sweep(cfg, parse_sweep_axis(sweep_axis), parse_values(sweep_values), sweep_out);
      std::cout << io::read_text(fs::path(sweep_out) / "sweep.txt");
      std::cout << rows.size() << " runs under " << sweep_out << "\n";
    } else if (*report_cmd) {
      const auto rec = RunRecord::load(report_run);
      const auto files = render_report(rec, report_out.empty() ? fs::path(report_run) : fs::path(report_out));
      for (const auto& f : files) std::cout << f.string() << "\n";
    } else {
      for (const auto& s : stages) {
        if (!*s.cmd) continue;
        PipelineOptions opts;
        opts.until = s.until;
        const auto cfg = build_config(stage_args, run_dir);
        print_record(run_pipeline(cfg, run_dir, opts));
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::invalid_config ? kExitConfig : kExitStage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitOk;
}
