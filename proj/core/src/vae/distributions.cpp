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

#include "jnf/vae/distributions.hpp"

#include <cmath>
#include <numbers>

#include "jnf/error.hpp"

namespace jnflow::vae {

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

}  // namespace

DiagGaussian DiagGaussian::from_raw(const Var& mean, const Var& raw_log_var) {
  return {mean, ad::clamp(raw_log_var, kLogVarMin, kLogVarMax)};
}

DiagGaussian DiagGaussian::from_encoder_output(const Var& out) {
  if (out.cols() % 2 != 0) throw Error(ErrorCode::shape_mismatch, "encoder output width must be even");
  const Eigen::Index d = out.cols() / 2;
  return from_raw(ad::cols(out, 0, d), ad::cols(out, d, d));
}

DiagGaussian DiagGaussian::standard(Eigen::Index n, Eigen::Index d) {
  return {ad::constant(Matrix::Zero(n, d)), ad::constant(Matrix::Zero(n, d))};
}

Var reparameterize(const DiagGaussian& q, const Matrix& eps) {
  if (eps.rows() != q.mean.rows() || eps.cols() != q.mean.cols()) {
    throw Error(ErrorCode::shape_mismatch, "reparameterize: noise shape differs from the distribution");
  }
  return q.mean + ad::exp(q.log_var * 0.5) * ad::constant(eps);
}

Var log_density(const DiagGaussian& q, const Var& z) {
  if (z.rows() != q.mean.rows() || z.cols() != q.mean.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "log_density: z shape differs from the distribution");
  }
  const Var r = z - q.mean;
  const Var quad = ad::square(r) * ad::exp(-q.log_var);
  return (ad::row_sum(quad + q.log_var) + static_cast<double>(q.dim()) * kLog2Pi) * -0.5;
}

Var standard_normal_log_density(const Var& z) {
  return (ad::row_sum(ad::square(z)) + static_cast<double>(z.cols()) * kLog2Pi) * -0.5;
}

Var kl_diag_gaussians(const DiagGaussian& a, const DiagGaussian& b) {
  if (a.dim() != b.dim() || a.mean.rows() != b.mean.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "kl_diag_gaussians: dimensions differ");
  }
  const Var inv_vb = ad::exp(-b.log_var);
  const Var t = ad::exp(a.log_var - b.log_var) + ad::square(b.mean - a.mean) * inv_vb + b.log_var - a.log_var;
  return (ad::row_sum(t) - static_cast<double>(a.dim())) * 0.5;
}

Var kl_to_standard_normal(const DiagGaussian& q) {
  const Var t = ad::exp(q.log_var) + ad::square(q.mean) - q.log_var;
  return (ad::row_sum(t) - static_cast<double>(q.dim())) * 0.5;
}

Var log_likelihood(const Var& params, const Matrix& x, data::LikelihoodFamily family) {
  if (params.rows() != x.rows() || params.cols() != x.cols()) {
    throw Error(ErrorCode::shape_mismatch, "log_likelihood: decoder output " + std::to_string(params.rows()) + "x" +
                                               std::to_string(params.cols()) + " vs data " +
                                               std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
  const Var xv = ad::constant(x);
  switch (family) {
    case data::LikelihoodFamily::gaussian_unit_variance: {
      const double d = static_cast<double>(x.cols());
      return (ad::row_sum(ad::square(xv - params)) + d * kLog2Pi) * -0.5;
    }
    case data::LikelihoodFamily::bernoulli: {
      // Clamping p to [eps, 1 - eps] is the same as clamping the logit.
      const double bound = std::log((1.0 - kBernoulliEps) / kBernoulliEps);
      const Var logits = ad::clamp(params, -bound, bound);
      // x log s(l) + (1 - x) log s(-l) = x l + log s(-l)
      return ad::row_sum(xv * logits + ad::log_sigmoid(-logits));
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown likelihood family");
}

Matrix likelihood_mean(const Matrix& params, data::LikelihoodFamily family) {
  if (family == data::LikelihoodFamily::bernoulli) {
    return (1.0 + (-params.array()).exp()).inverse().matrix();
  }
  return params;
}

}  // namespace jnflow::vae
