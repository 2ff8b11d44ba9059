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

#ifndef JNF_VAE_ELBO_HPP_
#define JNF_VAE_ELBO_HPP_

#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/nn.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::vae {

/// Batch-mean ELBO and its two components (all 1x1), plus per-sample values.
struct ElboTerms {
  Var elbo;
  Var reconstruction;
  Var kl;
  Matrix per_sample;
};

/// E_q[sum_i w_i log p(x_i|z)] - kl_weight * KL(q(z|X) || N(0,I)) with one
/// reparameterized draw per sample taken from `eps` (N x d_z).
ElboTerms elbo(const JointModel& model, const std::vector<Matrix>& batch, const Matrix& eps, double kl_weight = 1.0);
ElboTerms elbo(const JointModel& model, const std::vector<Matrix>& batch, Rng& rng, double kl_weight = 1.0);

/// Per-row weighted reconstruction log-likelihood sum_i w_i log p(x_i | z).
Var weighted_log_likelihood(const JointModel& model, const std::vector<Matrix>& batch, const Var& z);

/// Maximizes the joint ELBO over encoder and decoders.  Returns the mean
/// training ELBO of every epoch.
std::vector<double> train_step1(JointModel& model, const data::MultimodalDataset& dataset, const nn::TrainConfig& cfg);

/// Throws training_diverged when `value` is not finite.
void check_finite_loss(double value, const std::string& stage, int epoch);

}  // namespace jnflow::vae

#endif  // JNF_VAE_ELBO_HPP_
