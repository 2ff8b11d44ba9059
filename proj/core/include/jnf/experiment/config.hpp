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

#ifndef JNF_EXPERIMENT_CONFIG_HPP_
#define JNF_EXPERIMENT_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jnf/data/toy.hpp"
#include "jnf/flow/flow_stack.hpp"
#include "jnf/io/archive.hpp"

namespace jnflow::experiment {

enum class Variant { jmvae_gaussian, jnf, jnf_dcca, jmvae_onestep };
const char* to_string(Variant v);
Variant parse_variant(const std::string& name);

enum class DatasetKind { toy, directory };

struct DatasetSection {
  DatasetKind kind = DatasetKind::toy;
  /// Dataset directory written by `toy-gen` or `ingest` (kind = directory).
  std::string path;
  /// Toy generator settings; toy.n_samples is the training-set size.
  data::ToyConfig toy;
  int n_validation = 512;
  int n_test = 512;
};

struct DccaSection {
  int output_dim = 16;
  /// "elbow" or a positive integer.
  std::string d_keep = "elbow";
  double tau_fraction = 0.5;
  double regularizer = 1e-3;
  std::vector<int> hidden{256, 256};
  int epochs = 100;
  int batch_size = 800;
  double lr = 1e-3;
  /// Retrain the encoders with output_dim = d_keep instead of truncating.
  bool retrain_at_keep = false;
};

struct TrainingSection {
  /// Total epochs; each step gets half unless overridden.
  int epochs = 200;
  int epochs_step1 = 0;
  int epochs_step2 = 0;
  double lr = 1e-3;
  int batch_size = 128;
  std::vector<double> reconstruction_weights;
  double clip_norm = 0.0;
  /// jmvae_onestep only.
  double alpha = 1.0;
  int warmup_epochs = 100;
};

struct HmcSection {
  double eps = 0.05;
  int steps = 10;
  int chains = 8;
  int burn_in = 200;
  int samples_per_chain = 100;
  double step_jitter = 0.0;
  bool adapt_metric = false;
};

struct EvalSection {
  int n_is = 1000;
  int n_mc = 100;
  /// Test rows used by the likelihood estimators.
  int n_likelihood = 100;
  /// Generations per source row for coherence.
  int coherence_samples = 1;
  /// Generated rows per direction for FID (0 disables FID).
  int fid_samples = 512;
  int vi_bound_pairs = 0;
  int vi_bound_n_mc = 1000;
  /// Decode to likelihood samples instead of means.
  bool likelihood_samples = false;
  /// Source rows per PoE subset (m > 2 only; 0 disables).
  int poe_sources = 20;
};

struct ClassifierSection {
  std::vector<int> hidden{128};
  int epochs = 10;
  int batch_size = 128;
  double lr = 1e-3;
  double accuracy_floor = 0.9;
};

/// Every hyperparameter of one experiment.  Serialized as flat dotted
/// key=value text; unknown keys are rejected.
struct ExperimentConfig {
  DatasetSection dataset;
  Variant variant = Variant::jnf;
  int latent_dim = 2;
  std::vector<int> encoder_hidden{256, 256};
  std::vector<int> decoder_hidden{256, 256};
  flow::FlowConfig flow;
  /// True when any dcca.* key was given (or the variant is jnf_dcca).
  bool has_dcca_section = false;
  DccaSection dcca;
  bool has_onestep_section = false;
  TrainingSection training;
  HmcSection hmc;
  EvalSection eval;
  ClassifierSection classifier;
  std::uint64_t seed = 0;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Applies key=value overrides on top of this config.
  void apply(const io::Manifest& entries);
  /// Canonical form listing every field.
  io::Manifest to_manifest() const;
  std::string to_text() const;
  /// Throws invalid_config.
  void validate() const;

  int step1_epochs() const;
  int step2_epochs() const;
  /// Flow depth actually used: 0 for the Gaussian variants.
  int flow_blocks() const;
  bool uses_dcca() const { return variant == Variant::jnf_dcca; }

  /// FNV-1a of the canonical text.
  std::uint64_t hash() const;
  /// Hashes of the fields each stage depends on.
  std::uint64_t data_hash() const;
  std::uint64_t joint_hash() const;
  std::uint64_t dcca_hash() const;
  std::uint64_t posteriors_hash() const;
  std::uint64_t classifiers_hash() const;
};

std::uint64_t fnv1a(const std::string& text);
std::string hex(std::uint64_t v);

}  // namespace jnflow::experiment

#endif  // JNF_EXPERIMENT_CONFIG_HPP_
