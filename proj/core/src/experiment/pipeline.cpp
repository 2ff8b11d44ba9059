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

#include "jnf/experiment/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "jnf/data/toy.hpp"
#include "jnf/error.hpp"
#include "jnf/eval/estimators.hpp"
#include "jnf/eval/fid.hpp"
#include "jnf/experiment/render.hpp"
#include "jnf/poe/poe.hpp"
#include "jnf/random.hpp"
#include "jnf/vae/elbo.hpp"

namespace jnflow::experiment {

const char* to_string(Stage s) {
  switch (s) {
    case Stage::data: return "data";
    case Stage::joint: return "joint";
    case Stage::dcca: return "dcca";
    case Stage::posteriors: return "posteriors";
    case Stage::classifiers: return "classifiers";
    case Stage::eval: return "eval";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::data, Stage::joint, Stage::dcca, Stage::posteriors, Stage::classifiers, Stage::eval}) {
    if (name == to_string(s)) return s;
  }
  throw Error(ErrorCode::invalid_argument, "unknown stage '" + name + "'");
}

const char* to_string(SweepAxis a) { return a == SweepAxis::flow_depth ? "flow_depth" : "dcca_dim"; }

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "flow_depth") return SweepAxis::flow_depth;
  if (name == "dcca_dim") return SweepAxis::dcca_dim;
  throw Error(ErrorCode::invalid_config, "unknown sweep axis '" + name + "' (flow_depth or dcca_dim)");
}

fs::path checkpoint_dir(const fs::path& run_dir, Stage s) { return run_dir / "checkpoints" / to_string(s); }
fs::path report_path(const fs::path& run_dir) { return run_dir / "metrics" / "report.txt"; }

Splits load_splits(const ExperimentConfig& cfg) {
  const auto n_val = static_cast<std::size_t>(cfg.dataset.n_validation);
  const auto n_test = static_cast<std::size_t>(cfg.dataset.n_test);
  data::MultimodalDataset all;
  std::size_t n_train = 0;
  if (cfg.dataset.kind == DatasetKind::toy) {
    data::ToyConfig tc = cfg.dataset.toy;
    n_train = static_cast<std::size_t>(tc.n_samples);
    tc.n_samples = static_cast<int>(n_train + n_val + n_test);
    all = data::generate_toy_dataset(tc);
  } else {
    all = data::load_dataset(cfg.dataset.path);
    if (all.size() <= n_val + n_test) {
      throw Error(ErrorCode::invalid_config, "dataset " + cfg.dataset.path + " has " + std::to_string(all.size()) +
                                                 " rows; need more than n_validation + n_test");
    }
    n_train = all.size() - n_val - n_test;
  }
  auto [train, rest] = all.split(n_train);
  auto [validation, test] = rest.split(n_val);
  return {std::move(train), std::move(validation), std::move(test)};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool stage_done(const fs::path& dir, std::uint64_t hash) {
  const fs::path marker = dir / "stage.txt";
  if (!fs::exists(marker)) return false;
  return io::Manifest::load(marker).get_or("stage_hash", "") == hex(hash);
}

void mark_stage(const fs::path& dir, std::uint64_t hash, double seconds) {
  io::Manifest m;
  m.set("stage_hash", hex(hash));
  m.set("seconds", seconds);
  m.save(dir / "stage.txt");
}

void save_curve(const fs::path& path, const std::vector<double>& curve) {
  std::ostringstream out;
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << ' ' << io::format_double(curve[i]) << '\n';
  io::write_text(path, out.str());
}

std::vector<double> load_curve(const fs::path& path) {
  std::vector<double> out;
  std::istringstream in(io::read_text(path));
  int epoch = 0;
  double v = 0.0;
  while (in >> epoch >> v) out.push_back(v);
  return out;
}

nn::TrainConfig train_config(int epochs, int batch, double lr, double clip, std::uint64_t seed,
                             const std::string& stage) {
  nn::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch;
  t.adam.learning_rate = lr;
  t.adam.clip_norm = clip;
  t.seed = seed;
  t.on_epoch = [stage, epochs](int e, double loss) {
    spdlog::info("[{}] epoch {}/{} loss {:.4f}", stage, e + 1, epochs, loss);
  };
  return t;
}

vae::JointModelConfig joint_config(const ExperimentConfig& cfg) {
  vae::JointModelConfig jc;
  jc.latent_dim = cfg.latent_dim;
  jc.encoder_hidden = cfg.encoder_hidden;
  jc.decoder_hidden = cfg.decoder_hidden;
  jc.reconstruction_weights = cfg.training.reconstruction_weights;
  return jc;
}

flow::FlowConfig flow_config(const ExperimentConfig& cfg) {
  flow::FlowConfig fc = cfg.flow;
  fc.n_blocks = cfg.flow_blocks();
  return fc;
}

flow::ConditioningMode conditioning_mode(const ExperimentConfig& cfg) {
  return cfg.uses_dcca() ? flow::ConditioningMode::dcca_embedding : flow::ConditioningMode::raw_data;
}

int choose_d_keep(const ExperimentConfig& cfg, const dcca::DccaProjectionSet& set) {
  dcca::DimPolicy policy;
  if (cfg.dcca.d_keep == "elbow") {
    policy.tau_fraction = cfg.dcca.tau_fraction;
  } else {
    policy.kind = dcca::DimPolicy::Kind::fixed;
    policy.k = std::stoi(cfg.dcca.d_keep);
  }
  return dcca::select_embedding_dim(set.spectrum(), policy);
}

dcca::DccaProjectionSet train_dcca_stage(const ExperimentConfig& cfg, const Splits& s, std::vector<double>& curve) {
  dcca::DccaConfig dc;
  dc.output_dim = cfg.dcca.output_dim;
  dc.hidden = cfg.dcca.hidden;
  dc.regularizer = cfg.dcca.regularizer;
  const auto tc = train_config(cfg.dcca.epochs, cfg.dcca.batch_size, cfg.dcca.lr, cfg.training.clip_norm,
                               mix_seed(cfg.seed, 21), "dcca");
  Rng rng(mix_seed(cfg.seed, 20));
  dcca::DccaProjectionSet set(s.train.specs(), dc, rng);
  curve = dcca::train_dcca(set, s.train, s.validation, tc);
  if (cfg.dcca.retrain_at_keep) {
    const int k = choose_d_keep(cfg, set);
    if (k < dc.output_dim) {
      spdlog::info("[dcca] retraining with output_dim = {}", k);
      dc.output_dim = k;
      Rng rng2(mix_seed(cfg.seed, 22));
      dcca::DccaProjectionSet narrow(s.train.specs(), dc, rng2);
      curve = dcca::train_dcca(narrow, s.train, s.validation, tc);
      set = std::move(narrow);
    }
  }
  return set;
}

struct StageRunner {
  const ExperimentConfig& cfg;
  const fs::path& run_dir;
  RunRecord& record;

  template <typename F>
  void run(Stage stage, std::uint64_t hash, F&& body) {
    const fs::path dir = checkpoint_dir(run_dir, stage);
    record.checkpoints[to_string(stage)] = dir;
    if (stage_done(dir, hash)) {
      spdlog::info("[{}] checkpoint matches stage hash {}; skipping", to_string(stage), hex(hash));
      record.timings.push_back({to_string(stage), 0.0, true});
      return;
    }
    const auto t0 = Clock::now();
    try {
      fs::remove_all(dir);
      fs::create_directories(dir);
      body(dir);
    } catch (const Error& e) {
      throw Error(ErrorCode::stage_failure, std::string("stage '") + to_string(stage) + "' failed: " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::stage_failure, std::string("stage '") + to_string(stage) + "' failed: " + e.what());
    }
    const double secs = seconds_since(t0);
    mark_stage(dir, hash, secs);
    record.timings.push_back({to_string(stage), secs, false});
    spdlog::info("[{}] done in {:.1f}s", to_string(stage), secs);
  }
};

void write_run_record(const RunRecord& r) {
  io::Manifest m;
  m.set("config_hash", hex(r.config_hash));
  for (const auto& t : r.timings) {
    m.set("stage." + t.stage + ".seconds", t.seconds);
    m.set("stage." + t.stage + ".resumed", std::string(t.resumed ? "true" : "false"));
  }
  m.save(r.run_dir / "metrics" / "run_record.txt");
}

}  // namespace

RunRecord run_pipeline(const ExperimentConfig& cfg, const fs::path& run_dir, const PipelineOptions& opts) {
  cfg.validate();
  RunRecord record;
  record.run_dir = run_dir;
  record.config = cfg;
  record.config_hash = cfg.hash();
  fs::create_directories(run_dir / "metrics");
  io::write_text(run_dir / "config.txt", cfg.to_text());
  spdlog::info("run {} (config hash {})", run_dir.string(), hex(record.config_hash));

  const auto t0 = Clock::now();
  Splits splits;
  try {
    splits = load_splits(cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_config) throw;
    throw Error(ErrorCode::stage_failure, std::string("stage 'data' failed: ") + e.what());
  }
  record.timings.push_back({"data", seconds_since(t0), false});
  if (cfg.dataset.kind == DatasetKind::directory && !cfg.training.reconstruction_weights.empty() &&
      cfg.training.reconstruction_weights.size() != splits.train.num_modalities()) {
    throw Error(ErrorCode::invalid_config, "training.reconstruction_weights needs one entry per modality");
  }
  StageRunner runner{cfg, run_dir, record};
  const bool onestep = cfg.variant == Variant::jmvae_onestep;

  if (opts.until >= Stage::joint) {
    runner.run(Stage::joint, cfg.joint_hash(), [&](const fs::path& dir) {
      Rng rng(mix_seed(cfg.seed, 10));
      vae::JointModel joint(splits.train.specs(), joint_config(cfg), rng);
      if (onestep) {
        Rng prng(mix_seed(cfg.seed, 30));
        flow::UnimodalPosteriorSet set(splits.train.specs(), cfg.latent_dim, flow_config(cfg),
                                       flow::ConditioningMode::raw_data, prng);
        const auto tc = train_config(cfg.training.epochs, cfg.training.batch_size, cfg.training.lr,
                                     cfg.training.clip_norm, mix_seed(cfg.seed, 11), "onestep");
        const auto res =
            flow::train_jmvae_onestep(joint, set, splits.train, cfg.training.alpha, cfg.training.warmup_epochs, tc);
        save_curve(dir / "loss.txt", res.loss);
        set.save(dir / "posteriors");
      } else {
        const auto tc = train_config(cfg.step1_epochs(), cfg.training.batch_size, cfg.training.lr,
                                     cfg.training.clip_norm, mix_seed(cfg.seed, 11), "joint");
        const auto curve = vae::train_step1(joint, splits.train, tc);
        // Stored as the negated ELBO so every curve is a loss.
        std::vector<double> loss(curve.size());
        for (std::size_t i = 0; i < curve.size(); ++i) loss[i] = -curve[i];
        save_curve(dir / "loss.txt", loss);
      }
      joint.save(dir / "model");
    });
  }

  if (opts.until >= Stage::dcca && cfg.uses_dcca()) {
    runner.run(Stage::dcca, cfg.dcca_hash(), [&](const fs::path& dir) {
      std::vector<double> curve;
      const auto set = train_dcca_stage(cfg, splits, curve);
      save_curve(dir / "loss.txt", curve);
      set.save(dir / "model");
    });
  }

  if (opts.until >= Stage::posteriors) {
    runner.run(Stage::posteriors, cfg.posteriors_hash(), [&](const fs::path& dir) {
      if (onestep) {
        // Trained jointly with the joint model in step "joint".
        const fs::path src = checkpoint_dir(run_dir, Stage::joint) / "posteriors";
        fs::copy(src, dir / "model", fs::copy_options::recursive);
        return;
      }
      const auto joint = vae::JointModel::load(checkpoint_dir(run_dir, Stage::joint) / "model");
      std::optional<dcca::DccaProjectionSet> dset;
      int dcca_dim = 0;
      if (cfg.uses_dcca()) {
        dset = dcca::DccaProjectionSet::load(checkpoint_dir(run_dir, Stage::dcca) / "model");
        dcca_dim = choose_d_keep(cfg, *dset);
        dset->set_d_keep(dcca_dim);
        spdlog::info("[posteriors] conditioning on {} of {} DCCA dimensions", dcca_dim, dset->output_dim());
      }
      Rng rng(mix_seed(cfg.seed, 30));
      flow::UnimodalPosteriorSet set(splits.train.specs(), cfg.latent_dim, flow_config(cfg), conditioning_mode(cfg),
                                     rng, dcca_dim);
      const auto tc = train_config(cfg.step2_epochs(), cfg.training.batch_size, cfg.training.lr,
                                   cfg.training.clip_norm, mix_seed(cfg.seed, 31), "posteriors");
      const auto curve = flow::train_step2(set, joint, splits.train, dset ? &*dset : nullptr, tc);
      save_curve(dir / "loss.txt", curve);
      set.save(dir / "model");
    });
  }

  if (opts.until >= Stage::classifiers && splits.train.has_labels()) {
    runner.run(Stage::classifiers, cfg.classifiers_hash(), [&](const fs::path& dir) {
      for (std::size_t i = 0; i < splits.train.num_modalities(); ++i) {
        eval::ClassifierConfig cc;
        cc.hidden = cfg.classifier.hidden;
        cc.train = train_config(cfg.classifier.epochs, cfg.classifier.batch_size, cfg.classifier.lr, 0.0,
                                mix_seed(cfg.seed, 40 + i), "classifier." + splits.train.spec(i).name);
        cc.accuracy_floor = cfg.classifier.accuracy_floor;
        const auto clf = eval::train_classifier(splits.train.spec(i), splits.train.modality(i), splits.train.labels(), cc);
        spdlog::info("[classifiers] {}: held-out accuracy {:.4f}", splits.train.spec(i).name, clf.accuracy_on_test());
        clf.save(dir / ("modality_" + std::to_string(i)));
      }
    });
  }

  if (opts.until >= Stage::eval) {
    const fs::path rp = report_path(run_dir);
    bool resumed = false;
    if (fs::exists(rp)) {
      const auto old = eval::EvalReport::parse(io::read_text(rp));
      auto it = old.metadata.find("config_hash");
      if (it != old.metadata.end() && it->second == hex(record.config_hash)) {
        spdlog::info("[eval] report matches config hash; skipping");
        record.report = old;
        record.timings.push_back({"eval", 0.0, true});
        resumed = true;
      }
    }
    if (!resumed) {
      const auto te = Clock::now();
      try {
        const TrainedModels models = load_models(run_dir, splits.test.has_labels());
        record.report = evaluate(cfg, models, splits.test);
      } catch (const Error& e) {
        throw Error(ErrorCode::stage_failure, std::string("stage 'eval' failed: ") + e.what());
      }
      io::write_text(rp, record.report.to_text());
      record.timings.push_back({"eval", seconds_since(te), false});
    }
  }

  for (const auto& [name, dir] : record.checkpoints) {
    if (fs::exists(dir / "loss.txt")) record.loss_curves[name] = load_curve(dir / "loss.txt");
  }
  write_run_record(record);
  return record;
}

RunRecord RunRecord::load(const fs::path& run_dir) {
  RunRecord r;
  r.run_dir = run_dir;
  r.config = ExperimentConfig::load(run_dir / "config.txt");
  r.config_hash = r.config.hash();
  for (Stage s : {Stage::joint, Stage::dcca, Stage::posteriors, Stage::classifiers}) {
    const fs::path dir = checkpoint_dir(run_dir, s);
    if (!fs::exists(dir)) continue;
    r.checkpoints[to_string(s)] = dir;
    if (fs::exists(dir / "loss.txt")) r.loss_curves[to_string(s)] = load_curve(dir / "loss.txt");
  }
  if (fs::exists(report_path(run_dir))) r.report = eval::EvalReport::parse(io::read_text(report_path(run_dir)));
  const fs::path rr = run_dir / "metrics" / "run_record.txt";
  if (fs::exists(rr)) {
    const auto m = io::Manifest::load(rr);
    for (Stage s : {Stage::data, Stage::joint, Stage::dcca, Stage::posteriors, Stage::classifiers, Stage::eval}) {
      const std::string key = std::string("stage.") + to_string(s) + ".seconds";
      if (m.has(key)) {
        r.timings.push_back({to_string(s), m.get_double(key),
                             m.get_or(std::string("stage.") + to_string(s) + ".resumed", "false") == "true"});
      }
    }
  }
  return r;
}

TrainedModels load_models(const fs::path& run_dir, bool with_classifiers) {
  TrainedModels m;
  m.joint = vae::JointModel::load(checkpoint_dir(run_dir, Stage::joint) / "model");
  const fs::path dd = checkpoint_dir(run_dir, Stage::dcca) / "model";
  m.posteriors = flow::UnimodalPosteriorSet::load(checkpoint_dir(run_dir, Stage::posteriors) / "model");
  if (m.posteriors.mode() == flow::ConditioningMode::dcca_embedding) {
    m.dcca = dcca::DccaProjectionSet::load(dd);
    m.dcca->set_d_keep(m.posteriors.posterior(0).input_dim());
  }
  if (with_classifiers) {
    for (std::size_t i = 0; i < m.joint.num_modalities(); ++i) {
      m.classifiers.push_back(
          eval::Classifier::load(checkpoint_dir(run_dir, Stage::classifiers) / ("modality_" + std::to_string(i))));
    }
  }
  return m;
}

poe::HmcConfig hmc_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  poe::HmcConfig h;
  h.step_size = cfg.hmc.eps;
  h.leapfrog_steps = cfg.hmc.steps;
  h.n_chains = cfg.hmc.chains;
  h.burn_in = cfg.hmc.burn_in;
  h.samples_per_chain = cfg.hmc.samples_per_chain;
  h.step_jitter = cfg.hmc.step_jitter;
  h.adapt_metric = cfg.hmc.adapt_metric;
  h.seed = seed;
  return h;
}

Matrix cross_generate(const TrainedModels& m, std::size_t target, std::size_t source, const Matrix& sources,
                      bool likelihood_samples, Rng& rng) {
  ad::FrozenParameters frozen;
  const Matrix c = flow::conditioning_input(m.posteriors, source, sources, m.dcca_ptr());
  const auto draw =
      m.posteriors.posterior(source).sample(ad::constant(c), rng.normal_matrix(sources.rows(), m.joint.latent_dim()));
  return poe::decode_latents(m.joint, target, draw.z.value(), likelihood_samples ? &rng : nullptr);
}

namespace {

std::string direction_key(const data::MultimodalDataset& ds, std::size_t target, const std::vector<std::size_t>& src) {
  std::string key = ds.spec(target).name + "|";
  for (std::size_t k = 0; k < src.size(); ++k) key += (k ? "+" : "") + ds.spec(src[k]).name;
  return key;
}

// All subsets of `pool` with at least two members, in lexicographic order.
std::vector<std::vector<std::size_t>> subsets_of_two_or_more(const std::vector<std::size_t>& pool) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = pool.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> s;
    for (std::size_t b = 0; b < n; ++b)
      if (mask & (std::size_t{1} << b)) s.push_back(pool[b]);
    if (s.size() >= 2) out.push_back(std::move(s));
  }
  return out;
}


}  // namespace

eval::EvalReport evaluate(const ExperimentConfig& cfg, const TrainedModels& m, const data::MultimodalDataset& test) {
  ad::FrozenParameters frozen;
  eval::EvalReport r;
  r.model_id = std::string(to_string(cfg.variant)) + "-" + hex(cfg.hash());
  r.dataset_id = cfg.dataset.kind == DatasetKind::toy ? "toy-" + hex(cfg.data_hash()) : cfg.dataset.path;
  r.seed = cfg.seed;
  r.n_is = cfg.eval.n_is;
  r.n_mc = cfg.eval.n_mc;
  r.metadata["config_hash"] = hex(cfg.hash());
  r.metadata["joint_hash"] = hex(m.joint.hash());
  r.metadata["posteriors_hash"] = hex(m.posteriors.hash());
  r.metadata["flow_blocks"] = std::to_string(cfg.flow_blocks());
  if (m.dcca) r.metadata["dcca_d_keep"] = std::to_string(m.dcca->d_keep());

  const std::size_t nm = test.num_modalities();
  const auto nl = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.n_likelihood), test.size());
  Rng rng(mix_seed(cfg.seed, 100));

  std::vector<Matrix> cond(nm);
  for (std::size_t i = 0; i < nm; ++i) cond[i] = flow::conditioning_input(m.posteriors, i, test.modality(i), m.dcca_ptr());

  if (nl > 0) {
    spdlog::info("[eval] joint log-likelihood on {} samples, n_is = {}", nl, cfg.eval.n_is);
    double total = 0.0;
    for (std::size_t row = 0; row < nl; ++row) {
      std::vector<RowVector> s;
      for (std::size_t i = 0; i < nm; ++i) s.push_back(test.modality(i).row(static_cast<Eigen::Index>(row)));
      total += eval::estimate_joint_ll(m.joint, s, cfg.eval.n_is, rng).value;
    }
    r.joint_ll = total / static_cast<double>(nl);
  }

  for (std::size_t t = 0; t < nm; ++t) {
    for (std::size_t s = 0; s < nm; ++s) {
      if (s == t) continue;
      const std::string key = direction_key(test, t, {s});
      if (nl > 0) {
        double total = 0.0;
        for (std::size_t row = 0; row < nl; ++row) {
          const auto ri = static_cast<Eigen::Index>(row);
          total += eval::estimate_cond_ll(m.joint, m.posteriors.posterior(s), t, cond[s].row(ri),
                                          test.modality(t).row(ri), cfg.eval.n_mc, rng)
                       .value;
        }
        r.cond_ll[key] = total / static_cast<double>(nl);
      }
      if (m.classifiers.empty()) continue;
      const eval::Classifier& clf = m.classifiers[t];
      if (clf.accuracy_on_test() < cfg.classifier.accuracy_floor) {
        r.metadata["coherence." + key] = "skipped: classifier accuracy " + io::format_double(clf.accuracy_on_test()) +
                                         " below floor " + io::format_double(cfg.classifier.accuracy_floor);
        continue;
      }
      const eval::Generator gen = [&](const Matrix& src, Rng& g) {
        return cross_generate(m, t, s, src, cfg.eval.likelihood_samples, g);
      };
      r.coherence[key] = eval::coherence(gen, clf, test.modality(s), test.labels(), cfg.eval.coherence_samples, rng,
                                         cfg.classifier.accuracy_floor);
      spdlog::info("[eval] coherence {} = {:.4f}", key, r.coherence[key]);

      const auto nf = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.fid_samples), test.size());
      const auto feat_dim = static_cast<std::size_t>(clf.features(test.modality(t).topRows(1)).cols());
      if (nf > feat_dim) {
        const auto n = static_cast<Eigen::Index>(nf);
        const Matrix real = clf.features(test.modality(t).topRows(n));
        const Matrix fake = clf.features(cross_generate(m, t, s, test.modality(s).topRows(n), cfg.eval.likelihood_samples, rng));
        r.fid[key] = eval::fid(real, fake);
      } else if (cfg.eval.fid_samples > 0) {
        r.metadata["fid." + key] = "skipped: need more than " + std::to_string(feat_dim) + " samples";
      }
    }
  }

  if (nm > 2 && cfg.eval.poe_sources > 0) {
    const auto np = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.poe_sources), test.size());
    for (std::size_t t = 0; t < nm; ++t) {
      std::vector<std::size_t> pool;
      for (std::size_t s = 0; s < nm; ++s)
        if (s != t) pool.push_back(s);
      for (const auto& subset : subsets_of_two_or_more(pool)) {
        const std::string key = direction_key(test, t, subset);
        spdlog::info("[eval] PoE {} on {} sources", key, np);
        double agree = 0.0, ll = 0.0;
        const bool judge = !m.classifiers.empty() && m.classifiers[t].accuracy_on_test() >= cfg.classifier.accuracy_floor;
        for (std::size_t row = 0; row < np; ++row) {
          const auto ri = static_cast<Eigen::Index>(row);
          poe::PoeTarget target(m.joint.latent_dim());
          for (std::size_t s : subset) target.add_expert(m.posteriors.posterior(s), cond[s].row(ri));
          const auto hc = hmc_config(cfg, mix_seed(cfg.seed, 1000 + row));
          if (judge) {
            Rng lrng(mix_seed(cfg.seed, 2000 + row));
            const Matrix gen = poe::conditional_generate_subset(m.joint, target, hc, t, cfg.eval.coherence_samples,
                                                                cfg.eval.likelihood_samples ? &lrng : nullptr);
            agree += eval::label_agreement(m.classifiers[t], gen,
                                           std::vector<int>(static_cast<std::size_t>(gen.rows()), test.label(row)));
          }
          if (row < nl) ll += eval::estimate_cond_ll(m.joint, target, hc, t, test.modality(t).row(ri), cfg.eval.n_mc).value;
        }
        if (judge) r.coherence[key] = agree / static_cast<double>(np);
        const auto nll = std::min(np, nl);
        if (nll > 0) r.cond_ll[key] = ll / static_cast<double>(nll);
      }
    }
  }

  if (nm == 2 && cfg.eval.vi_bound_pairs > 0) {
    const auto np = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval.vi_bound_pairs), test.size());
    int violations = 0;
    for (std::size_t row = 0; row < np; ++row) {
      const auto ri = static_cast<Eigen::Index>(row);
      const std::vector<RowVector> sample{test.modality(0).row(ri), test.modality(1).row(ri)};
      const std::vector<RowVector> c{cond[0].row(ri), cond[1].row(ri)};
      if (!eval::vi_bound_check(m.joint, m.posteriors, sample, c, cfg.eval.vi_bound_n_mc, rng).satisfied) ++violations;
    }
    r.vi_bound_violation_rate = static_cast<double>(violations) / static_cast<double>(np);
  }

  if (!m.classifiers.empty()) {
    for (std::size_t i = 0; i < nm; ++i) {
      r.metadata["classifier." + test.spec(i).name + ".accuracy"] = io::format_double(m.classifiers[i].accuracy_on_test());
      r.metadata["classifier." + test.spec(i).name + ".extractor"] = hex(m.classifiers[i].hash());
    }
  }
  return r;
}

namespace {

void copy_stage(const fs::path& from_run, const fs::path& to_run, Stage s) {
  const fs::path src = checkpoint_dir(from_run, s);
  const fs::path dst = checkpoint_dir(to_run, s);
  if (!fs::exists(src / "stage.txt")) return;
  if (fs::exists(dst / "stage.txt") &&
      io::read_text(dst / "stage.txt") == io::read_text(src / "stage.txt")) {
    return;
  }
  fs::remove_all(dst);
  fs::create_directories(dst.parent_path());
  fs::copy(src, dst, fs::copy_options::recursive);
}

}  // namespace

std::vector<SweepRow> ablation_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<int>& values,
                                     const fs::path& out_dir) {
  base.validate();
  if (values.empty()) throw Error(ErrorCode::invalid_config, "sweep needs at least one value");
  std::vector<ExperimentConfig> cfgs;
  for (int v : values) {
    ExperimentConfig c = base;
    if (axis == SweepAxis::flow_depth) {
      if (v < 0) throw Error(ErrorCode::invalid_config, "flow_depth values must be >= 0");
      if (base.variant != Variant::jnf && base.variant != Variant::jnf_dcca) {
        throw Error(ErrorCode::invalid_config, "flow_depth sweeps need variant jnf or jnf_dcca");
      }
      c.flow.n_blocks = v;
    } else {
      if (!base.uses_dcca()) throw Error(ErrorCode::invalid_config, "dcca_dim sweeps need variant jnf_dcca");
      if (v < 1 || v > base.dcca.output_dim) {
        throw Error(ErrorCode::invalid_config, "dcca_dim values must lie in [1, dcca.output_dim]");
      }
      c.dcca.d_keep = std::to_string(v);
    }
    c.validate();
    cfgs.push_back(std::move(c));
  }

  std::vector<SweepRow> rows;
  fs::path first_run;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const fs::path run = out_dir / (std::string(to_string(axis)) + "_" + std::to_string(values[k]));
    if (!first_run.empty()) {
      // Stages unaffected by the axis are reused; stage hashes decide.
      for (Stage s : {Stage::joint, Stage::dcca, Stage::classifiers}) copy_stage(first_run, run, s);
    }
    spdlog::info("sweep {} = {}", to_string(axis), values[k]);
    const RunRecord rec = run_pipeline(cfgs[k], run);
    if (first_run.empty()) first_run = run;
    rows.push_back({values[k], run, rec.report});
  }
  write_sweep_outputs(axis, rows, out_dir);
  return rows;
}

}  // namespace jnflow::experiment
