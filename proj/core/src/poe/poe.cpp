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

#include "jnf/poe/poe.hpp"

#include <algorithm>

#include "jnf/error.hpp"
#include "jnf/vae/distributions.hpp"

namespace jnflow::poe {

void PoeTarget::add_expert(const flow::FlowStack& expert, const RowVector& conditioning) {
  if (expert.latent_dim() != dim_) throw Error(ErrorCode::dimension_mismatch, "PoE experts must share the latent dim");
  if (conditioning.size() != expert.input_dim()) {
    throw Error(ErrorCode::dimension_mismatch, "PoE expert conditioning has the wrong width");
  }
  experts_.push_back({&expert, conditioning});
}

Var PoeTarget::log_density(const Var& z) const {
  if (experts_.empty()) throw Error(ErrorCode::invalid_argument, "PoE target needs at least one expert");
  Var total;
  for (const auto& e : experts_) {
    const Var c = ad::constant(e.conditioning.replicate(z.rows(), 1));
    const Var lq = e.stack->log_density(z, c);
    total = total.defined() ? total + lq : lq;
  }
  if (experts_.size() > 1) {
    total = total - vae::standard_normal_log_density(z) * static_cast<double>(experts_.size() - 1);
  }
  return total;
}

Matrix decode_latents(const vae::JointModel& joint, std::size_t modality, const Matrix& z, Rng* rng) {
  ad::FrozenParameters frozen;
  const auto family = joint.specs().at(modality).likelihood;
  const Matrix params = joint.decode(modality, ad::constant(z)).value();
  Matrix mean = vae::likelihood_mean(params, family);
  if (rng == nullptr) return mean;
  if (family == data::LikelihoodFamily::bernoulli) {
    for (Eigen::Index i = 0; i < mean.size(); ++i) mean(i) = rng->uniform() < mean(i) ? 1.0 : 0.0;
    return mean;
  }
  return mean + rng->normal_matrix(mean.rows(), mean.cols());
}

Matrix conditional_generate_subset(const vae::JointModel& joint, const PoeTarget& target, const HmcConfig& cfg,
                                   std::size_t modality, int n, Rng* likelihood_rng) {
  if (n <= 0) return Matrix(0, joint.specs().at(modality).dim());
  HmcConfig run = cfg;
  const int per_chain = (n + run.n_chains - 1) / run.n_chains;
  run.samples_per_chain = std::max(run.samples_per_chain, per_chain);
  const HmcResult res = hmc_sample(target, run);
  const Eigen::Index total = res.samples.rows();
  Matrix z(n, target.dim());
  for (int k = 0; k < n; ++k) {
    const Eigen::Index row = static_cast<Eigen::Index>((static_cast<long long>(k) * total) / n);
    z.row(k) = res.samples.row(row);
  }
  return decode_latents(joint, modality, z, likelihood_rng);
}

}  // namespace jnflow::poe
