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

#include "jnf/eval/estimators.hpp"

#include <cmath>

#include "jnf/error.hpp"
#include "jnf/vae/distributions.hpp"

namespace jnflow::eval {

McEstimate log_mean_exp(const Vector& log_w) {
  const Eigen::Index n = log_w.size();
  if (n == 0) throw Error(ErrorCode::insufficient_samples, "log_mean_exp of an empty set");
  const double mx = log_w.maxCoeff();
  if (!std::isfinite(mx)) return {mx, 0.0};
  const Vector w = (log_w.array() - mx).exp().matrix();
  const double m = w.mean();
  McEstimate e{mx + std::log(m), 0.0};
  if (n > 1) {
    const double var = (w.array() - m).square().sum() / static_cast<double>(n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n)) / m;
  }
  return e;
}

McEstimate mean_estimate(const Vector& values) {
  const Eigen::Index n = values.size();
  if (n == 0) throw Error(ErrorCode::insufficient_samples, "mean of an empty set");
  McEstimate e{values.mean(), 0.0};
  if (n > 1) {
    const double var = (values.array() - e.value).square().sum() / static_cast<double>(n - 1);
    e.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return e;
}

Vector decoder_log_likelihood(const vae::JointModel& joint, std::size_t target, const RowVector& x_target,
                              const Matrix& z) {
  ad::FrozenParameters frozen;
  const Matrix x = x_target.replicate(z.rows(), 1);
  return vae::log_likelihood(joint.decode(target, ad::constant(z)), x, joint.specs().at(target).likelihood)
      .value()
      .col(0);
}

Vector log_importance_weights(const vae::JointModel& joint, const std::vector<RowVector>& sample, int n_is, Rng& rng) {
  if (n_is < 1) throw Error(ErrorCode::invalid_argument, "n_is must be >= 1");
  ad::FrozenParameters frozen;
  std::vector<Matrix> one;
  for (const auto& r : sample) one.push_back(r);
  const vae::DiagGaussian q1 = joint.encode(one);
  const RowVector mu = q1.mean.value();
  const RowVector lv = q1.log_var.value();
  const Matrix eps = rng.normal_matrix(n_is, joint.latent_dim());
  const Matrix z = (eps.array().rowwise() * (0.5 * lv.array()).exp()).rowwise() + mu.array();
  const vae::DiagGaussian q{ad::constant(mu.replicate(n_is, 1)), ad::constant(lv.replicate(n_is, 1))};
  const ad::Var zv = ad::constant(z);
  Vector lw = vae::standard_normal_log_density(zv).value().col(0) - vae::log_density(q, zv).value().col(0);
  for (std::size_t i = 0; i < sample.size(); ++i) lw += decoder_log_likelihood(joint, i, sample[i], z);
  return lw;
}

McEstimate estimate_joint_ll(const vae::JointModel& joint, const std::vector<RowVector>& sample, int n_is, Rng& rng) {
  return log_mean_exp(log_importance_weights(joint, sample, n_is, rng));
}

std::vector<McEstimate> estimate_joint_ll_rows(const vae::JointModel& joint, const std::vector<Matrix>& xs, int n_is,
                                          Rng& rng) {
  std::vector<McEstimate> out;
  for (Eigen::Index r = 0; r < xs.at(0).rows(); ++r) {
    std::vector<RowVector> s;
    for (const auto& m : xs) s.push_back(m.row(r));
    out.push_back(estimate_joint_ll(joint, s, n_is, rng));
  }
  return out;
}

McEstimate estimate_cond_ll(const vae::JointModel& joint, const flow::FlowStack& posterior, std::size_t target,
                            const RowVector& conditioning, const RowVector& x_target, int n_mc, Rng& rng) {
  if (n_mc < 1) throw Error(ErrorCode::invalid_argument, "n_mc must be >= 1");
  ad::FrozenParameters frozen;
  const Matrix z = posterior.sample(conditioning, n_mc, rng);
  return log_mean_exp(decoder_log_likelihood(joint, target, x_target, z));
}

McEstimate estimate_cond_ll(const vae::JointModel& joint, const poe::PoeTarget& target_posterior,
                            const poe::HmcConfig& hmc, std::size_t target, const RowVector& x_target, int n_mc) {
  if (n_mc < 1) throw Error(ErrorCode::invalid_argument, "n_mc must be >= 1");
  poe::HmcConfig run = hmc;
  run.samples_per_chain = std::max(run.samples_per_chain, (n_mc + run.n_chains - 1) / run.n_chains);
  const poe::HmcResult res = poe::hmc_sample(target_posterior, run);
  Matrix z(n_mc, target_posterior.dim());
  const Eigen::Index total = res.samples.rows();
  for (int k = 0; k < n_mc; ++k) z.row(k) = res.samples.row(static_cast<Eigen::Index>((static_cast<long long>(k) * total) / n_mc));
  return log_mean_exp(decoder_log_likelihood(joint, target, x_target, z));
}

ViBoundResult vi_bound_check(const vae::JointModel& joint, const flow::UnimodalPosteriorSet& posteriors,
                             const std::vector<RowVector>& sample, const std::vector<RowVector>& conditioning,
                             int n_mc, Rng& rng) {
  if (sample.size() != 2 || posteriors.size() != 2) {
    throw Error(ErrorCode::invalid_argument, "the VI bound check is defined for two modalities");
  }
  ViBoundResult r;
  const McEstimate l21 = estimate_cond_ll(joint, posteriors.posterior(0), 1, conditioning[0], sample[1], n_mc, rng);
  const McEstimate l12 = estimate_cond_ll(joint, posteriors.posterior(1), 0, conditioning[1], sample[0], n_mc, rng);
  r.lhs = l21.value + l12.value;
  r.lhs_std_error = std::sqrt(l21.std_error * l21.std_error + l12.std_error * l12.std_error);

  ad::FrozenParameters frozen;
  std::vector<Matrix> one{sample[0], sample[1]};
  const vae::DiagGaussian q1 = joint.encode(one);
  const RowVector mu = q1.mean.value();
  const RowVector lv = q1.log_var.value();
  const Matrix eps = rng.normal_matrix(n_mc, joint.latent_dim());
  const Matrix z = (eps.array().rowwise() * (0.5 * lv.array()).exp()).rowwise() + mu.array();
  const ad::Var zv = ad::constant(z);
  const vae::DiagGaussian q{ad::constant(mu.replicate(n_mc, 1)), ad::constant(lv.replicate(n_mc, 1))};
  Vector terms = -2.0 * vae::log_density(q, zv).value().col(0);
  for (std::size_t i = 0; i < 2; ++i) {
    terms += decoder_log_likelihood(joint, i, sample[i], z);
    terms += posteriors.posterior(i)
                 .log_density(zv, ad::constant(conditioning[i].replicate(n_mc, 1)))
                 .value()
                 .col(0);
  }
  const McEstimate rhs = mean_estimate(terms);
  r.rhs = rhs.value;
  r.rhs_std_error = rhs.std_error;
  const double se = std::sqrt(r.lhs_std_error * r.lhs_std_error + r.rhs_std_error * r.rhs_std_error);
  r.satisfied = r.lhs >= r.rhs - 3.0 * se;
  return r;
}

}  // namespace jnflow::eval
