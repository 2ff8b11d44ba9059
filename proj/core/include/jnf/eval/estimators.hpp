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

#ifndef JNF_EVAL_ESTIMATORS_HPP_
#define JNF_EVAL_ESTIMATORS_HPP_

#include <vector>

#include "jnf/flow/flow_stack.hpp"
#include "jnf/flow/posteriors.hpp"
#include "jnf/poe/poe.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::eval {

/// A Monte-Carlo estimate with its (delta-method) standard error.
struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// log((1/n) sum_k exp(log_w_k)), computed stably.
McEstimate log_mean_exp(const Vector& log_w);
McEstimate mean_estimate(const Vector& values);

/// Importance-sampled log p(X) with proposal q(z|X) for one sample given as
/// one row per modality.  Likelihoods are unweighted.
McEstimate estimate_joint_ll(const vae::JointModel& joint, const std::vector<RowVector>& sample, int n_is, Rng& rng);
/// Row-wise over a batch of samples.
std::vector<McEstimate> estimate_joint_ll_rows(const vae::JointModel& joint, const std::vector<Matrix>& xs, int n_is,
                                          Rng& rng);
/// Log importance weights log p(X, z_k) - log q(z_k | X) for one sample.
Vector log_importance_weights(const vae::JointModel& joint, const std::vector<RowVector>& sample, int n_is, Rng& rng);

/// log (1/n) sum_k p(x_i | z_k) with z_k ~ posterior(z | conditioning).
McEstimate estimate_cond_ll(const vae::JointModel& joint, const flow::FlowStack& posterior, std::size_t target,
                            const RowVector& conditioning, const RowVector& x_target, int n_mc, Rng& rng);
/// Same with z_k drawn by HMC from a PoE over a subset of sources.
McEstimate estimate_cond_ll(const vae::JointModel& joint, const poe::PoeTarget& target_posterior,
                            const poe::HmcConfig& hmc, std::size_t target, const RowVector& x_target, int n_mc);
/// log p(x_target | z) for latent rows z, (n x 1).
Vector decoder_log_likelihood(const vae::JointModel& joint, std::size_t target, const RowVector& x_target,
                              const Matrix& z);

struct ViBoundResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_std_error = 0.0;
  double rhs_std_error = 0.0;
  bool satisfied = false;
};

/// lhs = log p(x2 | x1) + log p(x1 | x2), each estimated with the unimodal
/// posterior of the source; rhs = L + KL(q(z|X) || p) - L_JM
///     = E_q[log p(x1|z) + log p(x2|z) + log q1 + log q2 - 2 log q(z|X)].
/// satisfied when lhs >= rhs - 3 * sqrt(se_lhs^2 + se_rhs^2).
ViBoundResult vi_bound_check(const vae::JointModel& joint, const flow::UnimodalPosteriorSet& posteriors,
                             const std::vector<RowVector>& sample, const std::vector<RowVector>& conditioning,
                             int n_mc, Rng& rng);

}  // namespace jnflow::eval

#endif  // JNF_EVAL_ESTIMATORS_HPP_
