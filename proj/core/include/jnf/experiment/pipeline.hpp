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

#ifndef JNF_EXPERIMENT_PIPELINE_HPP_
#define JNF_EXPERIMENT_PIPELINE_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/dcca/projection.hpp"
#include "jnf/eval/classifier.hpp"
#include "jnf/eval/report.hpp"
#include "jnf/experiment/config.hpp"
#include "jnf/flow/posteriors.hpp"
#include "jnf/poe/hmc.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::experiment {

namespace fs = std::filesystem;

/// Pipeline stages in execution order.
enum class Stage { data, joint, dcca, posteriors, classifiers, eval };
const char* to_string(Stage s);
Stage parse_stage(const std::string& name);

struct Splits {
  data::MultimodalDataset train;
  data::MultimodalDataset validation;
  data::MultimodalDataset test;
};

/// Toy: generates train + validation + test rows with toy.seed and splits them
/// in that order.  Directory: the last n_test rows are the test set and the
/// n_validation rows before them the validation set.
Splits load_splits(const ExperimentConfig& cfg);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
  bool resumed = false;
};

struct RunRecord {
  fs::path run_dir;
  ExperimentConfig config;
  std::uint64_t config_hash = 0;
  /// Keyed by stage ("joint", "dcca", "posteriors", "onestep").
  std::map<std::string, std::vector<double>> loss_curves;
  std::map<std::string, fs::path> checkpoints;
  /// Empty when evaluation has not run.
  eval::EvalReport report;
  std::vector<StageTiming> timings;

  static RunRecord load(const fs::path& run_dir);
};

struct PipelineOptions {
  /// Last stage to run.
  Stage until = Stage::eval;
};

/// Runs every stage up to `opts.until`, skipping stages whose checkpoint
/// carries the current stage hash.  Throws invalid_config before any work
/// and stage_failure naming the failing stage.
RunRecord run_pipeline(const ExperimentConfig& cfg, const fs::path& run_dir, const PipelineOptions& opts = {});

/// Trained components of a run, loaded from its checkpoints.
struct TrainedModels {
  vae::JointModel joint;
  std::optional<dcca::DccaProjectionSet> dcca;
  flow::UnimodalPosteriorSet posteriors;
  std::vector<eval::Classifier> classifiers;

  const dcca::DccaProjectionSet* dcca_ptr() const { return dcca ? &*dcca : nullptr; }
};

TrainedModels load_models(const fs::path& run_dir, bool with_classifiers = true);

/// One generated `target` row per source row: z ~ q_source(z | c_source),
/// decoded to likelihood means (or samples when `likelihood_samples`).
Matrix cross_generate(const TrainedModels& m, std::size_t target, std::size_t source, const Matrix& sources,
                      bool likelihood_samples, Rng& rng);

/// HMC settings of the config with an explicit seed.
poe::HmcConfig hmc_config(const ExperimentConfig& cfg, std::uint64_t seed);

/// Metrics of a trained run on `test`.
eval::EvalReport evaluate(const ExperimentConfig& cfg, const TrainedModels& m, const data::MultimodalDataset& test);

enum class SweepAxis { flow_depth, dcca_dim };
const char* to_string(SweepAxis a);
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepRow {
  int value = 0;
  fs::path run_dir;
  eval::EvalReport report;
};

/// One run per value under out_dir/<axis>_<value>.  Checkpoints that the
/// axis does not affect are trained once and copied into every run.  Writes
/// out_dir/sweep.txt and coherence/FID-vs-axis plots.
std::vector<SweepRow> ablation_sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<int>& values,
                                     const fs::path& out_dir);

/// Path helpers for the run directory layout.
fs::path checkpoint_dir(const fs::path& run_dir, Stage s);
fs::path report_path(const fs::path& run_dir);

}  // namespace jnflow::experiment

#endif  // JNF_EXPERIMENT_PIPELINE_HPP_
