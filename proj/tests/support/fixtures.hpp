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

#ifndef JNF_TESTS_SUPPORT_FIXTURES_HPP_
#define JNF_TESTS_SUPPORT_FIXTURES_HPP_

#include <cmath>
#include <numbers>

#include "jnf/flow/flow_stack.hpp"
#include "jnf/random.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::testing {

/// FlowStack with K = 0 whose base encoder ignores its input and always
/// returns N(mean, diag exp(log_var)).
inline flow::FlowStack fixed_gaussian(const Vector& mean, const Vector& log_var, int input_dim = 1) {
  flow::FlowConfig cfg;
  cfg.n_blocks = 0;
  cfg.encoder_hidden = {};
  cfg.conditional = false;
  Rng rng(0);
  flow::FlowStack s("fixed", input_dim, static_cast<int>(mean.size()), cfg, rng);
  auto& layer = s.base_encoder().layer(0);
  layer.weight().value.setZero();
  layer.bias().value << mean.transpose(), log_var.transpose();
  return s;
}

/// One Gaussian modality x = z W + b + noise, noise ~ N(0, I); linear encoder.
struct LinearGaussian {
  vae::JointModel model;
  Matrix w;  // d x D
  RowVector b;

  /// Marginal covariance W^T W + I.
  Matrix marginal_cov() const {
    return w.transpose() * w + Matrix::Identity(w.cols(), w.cols());
  }
  double log_marginal(const RowVector& x) const {
    const Matrix c = marginal_cov();
    const Eigen::LLT<Matrix> llt(c);
    const Vector r = (x - b).transpose();
    const double quad = r.dot(llt.solve(r));
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * (quad + logdet + static_cast<double>(r.size()) * std::log(2.0 * std::numbers::pi));
  }
  /// Exact posterior p(z|x) = N(m, P^{-1}) with P = I + W W^T.
  void posterior(const RowVector& x, Vector& mean, Matrix& cov) const {
    const Matrix p = Matrix::Identity(w.rows(), w.rows()) + w * w.transpose();
    cov = p.inverse();
    mean = cov * w * (x - b).transpose();
  }
};

inline LinearGaussian make_linear_gaussian(int d, int dim_x, std::uint64_t seed) {
  Rng rng(seed);
  vae::JointModelConfig cfg;
  cfg.latent_dim = d;
  cfg.encoder_hidden = {};
  cfg.decoder_hidden = {};
  data::ModalitySpec spec{"x", {dim_x}, data::LikelihoodFamily::gaussian_unit_variance};
  LinearGaussian lg{vae::JointModel({spec}, cfg, rng), rng.normal_matrix(d, dim_x) * 0.8,
                    rng.normal_matrix(1, dim_x) * 0.5};
  lg.model.decoder(0).layer(0).weight().value = lg.w;
  lg.model.decoder(0).layer(0).bias().value = lg.b;
  // Encoder: mean from the exact posterior mean map, log-variance from the
  // exact posterior diagonal (so q differs from p(z|x) only by correlations).
  const Matrix p = Matrix::Identity(d, d) + lg.w * lg.w.transpose();
  const Matrix pinv = p.inverse();
  Matrix enc_w(dim_x, 2 * d);
  enc_w.leftCols(d) = (pinv * lg.w).transpose();
  enc_w.rightCols(d).setZero();
  RowVector enc_b(2 * d);
  enc_b.head(d) = -(lg.b * (pinv * lg.w).transpose());
  enc_b.tail(d) = pinv.diagonal().array().log().matrix().transpose();
  lg.model.encoder().layer(0).weight().value = enc_w;
  lg.model.encoder().layer(0).bias().value = enc_b;
  return lg;
}

}  // namespace jnflow::testing

#endif  // JNF_TESTS_SUPPORT_FIXTURES_HPP_
