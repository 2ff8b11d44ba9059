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

#ifndef JNF_DCCA_PROJECTION_HPP_
#define JNF_DCCA_PROJECTION_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/dcca/cca.hpp"
#include "jnf/nn.hpp"

namespace jnflow::dcca {

struct DccaConfig {
  int output_dim = 16;
  std::vector<int> hidden{256, 256};
  nn::Activation activation = nn::Activation::relu;
  double regularizer = kDefaultRegularizer;
};

/// Encoders g_i plus the CCA rotation fitted after training.  Embeddings are
/// (g_i(x) - mean_i) * rotation_i, whose columns are ordered by decreasing
/// canonical correlation.
class DccaProjectionSet {
 public:
  DccaProjectionSet() = default;
  DccaProjectionSet(const std::vector<data::ModalitySpec>& specs, DccaConfig cfg, Rng& rng);

  std::size_t num_modalities() const { return encoders_.size(); }
  int output_dim() const { return cfg_.output_dim; }
  const DccaConfig& config() const { return cfg_; }
  const std::vector<data::ModalitySpec>& specs() const { return specs_; }

  ad::Var raw(std::size_t modality, const Matrix& x) const;

  /// Fits means and rotations on (typically validation) data and stores the
  /// spectrum of every modality pair (i, j), i < j.
  void fit_rotation(const std::vector<Matrix>& xs);
  bool fitted() const { return !rotations_.empty(); }

  /// Spectrum of pair (0, 1): the one used for embedding-dimension selection.
  const Vector& spectrum() const { return spectra_.at(0); }
  const std::vector<Vector>& pair_spectra() const { return spectra_; }
  const Matrix& rotation(std::size_t i) const { return rotations_.at(i); }

  int d_keep() const { return d_keep_; }
  void set_d_keep(int k);

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::uint64_t hash() const { return nn::hash_parameters(parameters()); }

  void save(const std::filesystem::path& dir) const;
  static DccaProjectionSet load(const std::filesystem::path& dir);

  friend Matrix embed(const DccaProjectionSet& set, std::size_t modality, const Matrix& x,
                      std::optional<int> d_keep);

 private:
  std::vector<data::ModalitySpec> specs_;
  DccaConfig cfg_;
  std::vector<nn::Mlp> encoders_;
  std::vector<RowVector> means_;
  std::vector<Matrix> rotations_;
  std::vector<Vector> spectra_;
  int d_keep_ = 0;
};

/// -F for two modalities; -sum_{i<j} F_ij otherwise.
ad::Var dcca_loss(const DccaProjectionSet& set, const std::vector<Matrix>& batch);

/// Trains the encoders on `train`, then fits the rotation and spectrum on
/// `validation`.  Returns the mean training loss per epoch.
std::vector<double> train_dcca(DccaProjectionSet& set, const data::MultimodalDataset& train,
                               const data::MultimodalDataset& validation, const nn::TrainConfig& cfg);

struct DimPolicy {
  enum class Kind { elbow, fixed } kind = Kind::elbow;
  /// For elbow: keep values strictly above tau_fraction * max.
  double tau_fraction = 0.5;
  int k = 0;
};

/// Number of leading dimensions to keep; fixed(k) is clamped to the
/// spectrum length with a warning.
int select_embedding_dim(const Vector& spectrum, const DimPolicy& policy);

/// Rotated embedding of modality i truncated to d_keep columns (the set's
/// own d_keep when not given).
Matrix embed(const DccaProjectionSet& set, std::size_t modality, const Matrix& x, std::optional<int> d_keep = {});

}  // namespace jnflow::dcca

#endif  // JNF_DCCA_PROJECTION_HPP_
