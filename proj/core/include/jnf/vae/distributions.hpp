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

#ifndef JNF_VAE_DISTRIBUTIONS_HPP_
#define JNF_VAE_DISTRIBUTIONS_HPP_

#include "jnf/autodiff.hpp"
#include "jnf/data/dataset.hpp"

namespace jnflow::vae {

using ad::Var;

inline constexpr double kLogVarMin = -20.0;
inline constexpr double kLogVarMax = 20.0;
inline constexpr double kBernoulliEps = 1e-7;

/// Batched diagonal Gaussian; mean and log_var are (N x d).
struct DiagGaussian {
  Var mean;
  Var log_var;

  Eigen::Index dim() const { return mean.cols(); }
  /// Log-variance clamped to [kLogVarMin, kLogVarMax].
  static DiagGaussian from_raw(const Var& mean, const Var& raw_log_var);
  /// Splits an (N x 2d) encoder output into mean | log_var.
  static DiagGaussian from_encoder_output(const Var& out);
  static DiagGaussian standard(Eigen::Index n, Eigen::Index d);
};

/// z = mean + exp(log_var / 2) * eps.
Var reparameterize(const DiagGaussian& q, const Matrix& eps);

/// Per-row log N(z; mean, diag exp(log_var)), shape (N x 1).
Var log_density(const DiagGaussian& q, const Var& z);
Var standard_normal_log_density(const Var& z);

/// Per-row KL(a || b), shape (N x 1).
Var kl_diag_gaussians(const DiagGaussian& a, const DiagGaussian& b);
/// Per-row KL(q || N(0, I)).
Var kl_to_standard_normal(const DiagGaussian& q);

/// Per-row log p(x | params), shape (N x 1).  `params` are means for the
/// Gaussian family and logits for the Bernoulli family.
Var log_likelihood(const Var& params, const Matrix& x, data::LikelihoodFamily family);
/// Mean of p(x | params): identity or sigmoid.
Matrix likelihood_mean(const Matrix& params, data::LikelihoodFamily family);

}  // namespace jnflow::vae

#endif  // JNF_VAE_DISTRIBUTIONS_HPP_
