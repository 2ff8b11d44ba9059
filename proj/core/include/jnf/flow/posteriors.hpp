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

#ifndef JNF_FLOW_POSTERIORS_HPP_
#define JNF_FLOW_POSTERIORS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/dcca/projection.hpp"
#include "jnf/flow/flow_stack.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::flow {

enum class ConditioningMode { raw_data, dcca_embedding };

const char* to_string(ConditioningMode mode);
ConditioningMode parse_conditioning_mode(const std::string& name);

/// One FlowStack q_i(z | c_i) per modality, where c_i is x_i or the DCCA
/// embedding g_i(x_i).
class UnimodalPosteriorSet {
 public:
  UnimodalPosteriorSet() = default;
  UnimodalPosteriorSet(const std::vector<data::ModalitySpec>& specs, int latent_dim, FlowConfig cfg,
                       ConditioningMode mode, Rng& rng, int dcca_dim = 0);

  std::size_t size() const { return stacks_.size(); }
  ConditioningMode mode() const { return mode_; }
  int latent_dim() const { return latent_dim_; }
  FlowStack& posterior(std::size_t i) { return stacks_.at(i); }
  const FlowStack& posterior(std::size_t i) const { return stacks_.at(i); }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::uint64_t hash() const { return nn::hash_parameters(parameters()); }

  void save(const std::filesystem::path& dir, const io::Manifest& extra = {}) const;
  static UnimodalPosteriorSet load(const std::filesystem::path& dir);

 private:
  std::vector<FlowStack> stacks_;
  ConditioningMode mode_ = ConditioningMode::raw_data;
  int latent_dim_ = 0;
};

/// c_i for every modality of a batch.  Throws conditioning_mode_mismatch when
/// the set needs DCCA embeddings and `dcca` is null.
std::vector<Matrix> conditioning_inputs(const UnimodalPosteriorSet& set, const std::vector<Matrix>& xs,
                                        const dcca::DccaProjectionSet* dcca);
Matrix conditioning_input(const UnimodalPosteriorSet& set, std::size_t modality, const Matrix& x,
                          const dcca::DccaProjectionSet* dcca);

/// -sum_i mean log q_i(z | c_i) with z ~ q(z|X) drawn from `eps` and no
/// gradient path into the joint model.
Var ljm_loss(const UnimodalPosteriorSet& set, const vae::JointModel& joint, const std::vector<Matrix>& batch,
             const std::vector<Matrix>& conditioning, const Matrix& eps);
Var ljm_loss(const UnimodalPosteriorSet& set, const vae::JointModel& joint, const std::vector<Matrix>& batch,
             const dcca::DccaProjectionSet* dcca, Rng& rng);

/// Step 2: fits the unimodal posteriors with the joint model frozen.
/// Returns the mean L_JM per epoch.
std::vector<double> train_step2(UnimodalPosteriorSet& set, const vae::JointModel& joint,
                                const data::MultimodalDataset& dataset, const dcca::DccaProjectionSet* dcca,
                                const nn::TrainConfig& cfg);

struct OneStepResult {
  /// Mean of -(ELBO_beta) + alpha * L_JM per epoch.
  std::vector<double> loss;
  std::vector<double> elbo;
};

/// JMVAE-style single-step training of L - alpha * L_JM over the joint model
/// and the unimodal posteriors, L_JM = sum_i KL(q(z|X) || q_i(z|x_i))
/// estimated with the same reparameterized draw as the ELBO.  The ELBO's KL
/// weight rises linearly from 0 to 1 over `warmup_epochs`.
OneStepResult train_jmvae_onestep(vae::JointModel& joint, UnimodalPosteriorSet& set,
                                  const data::MultimodalDataset& dataset, double alpha, int warmup_epochs,
                                  const nn::TrainConfig& cfg);

}  // namespace jnflow::flow

#endif  // JNF_FLOW_POSTERIORS_HPP_
