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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "jnf/data/toy.hpp"
#include "jnf/error.hpp"
#include "jnf/vae/distributions.hpp"
#include "jnf/vae/elbo.hpp"
#include "support/fixtures.hpp"

namespace jnflow::vae {
namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// KL(N(m0, S0) || N(m1, S1)) for full covariances.
double kl_full(const Vector& m0, const Matrix& s0, const Vector& m1, const Matrix& s1) {
  const Eigen::LLT<Matrix> l1(s1);
  const Vector dm = m1 - m0;
  const double tr = l1.solve(s0).trace();
  const double quad = dm.dot(l1.solve(dm));
  const double ld1 = std::log(s1.determinant());
  const double ld0 = std::log(s0.determinant());
  return 0.5 * (tr + quad - static_cast<double>(m0.size()) + ld1 - ld0);
}

TEST(Distributions, GaussianLikelihoodMatchesClosedForm) {
  Matrix mu(2, 3), x(2, 3);
  mu << 0.1, -0.2, 0.3, 1.0, 2.0, -1.0;
  x << 0.0, 0.5, 0.2, 0.7, 2.5, -0.5;
  const Matrix ll = log_likelihood(ad::constant(mu), x, data::LikelihoodFamily::gaussian_unit_variance).value();
  for (int i = 0; i < 2; ++i) {
    const double expect = -0.5 * (x.row(i) - mu.row(i)).squaredNorm() - 1.5 * kLog2Pi;
    EXPECT_NEAR(ll(i, 0), expect, 1e-12);
  }
}

TEST(Distributions, BernoulliLikelihoodIsFiniteAtSaturatedLogits) {
  Matrix logits(1, 4);
  logits << 1000.0, -1000.0, 0.0, 2.0;
  Matrix x(1, 4);
  x << 0.0, 1.0, 1.0, 0.0;
  const double ll = log_likelihood(ad::constant(logits), x, data::LikelihoodFamily::bernoulli).value()(0, 0);
  EXPECT_TRUE(std::isfinite(ll));
  const double expect = 2.0 * std::log(kBernoulliEps) + std::log(0.5) + std::log(1.0 / (1.0 + std::exp(2.0)));
  EXPECT_NEAR(ll, expect, 1e-6);
}

TEST(Distributions, KlOfIdenticalGaussiansIsZero) {
  Rng rng(1);
  const DiagGaussian q{ad::constant(rng.normal_matrix(3, 4)), ad::constant(rng.normal_matrix(3, 4))};
  EXPECT_LT(kl_diag_gaussians(q, q).value().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Distributions, KlMatchesMonteCarlo) {
  Matrix ma(1, 2), va(1, 2), mb(1, 2), vb(1, 2);
  ma << 0.3, -1.0;
  va << -0.5, 0.4;
  mb << -0.2, 0.5;
  vb << 0.3, -0.2;
  const DiagGaussian a{ad::constant(ma), ad::constant(va)};
  const DiagGaussian b{ad::constant(mb), ad::constant(vb)};
  const double closed = kl_diag_gaussians(a, b).value()(0, 0);

  const int n = 200000;
  Rng rng(2);
  const DiagGaussian an{ad::constant(ma.replicate(n, 1)), ad::constant(va.replicate(n, 1))};
  const DiagGaussian bn{ad::constant(mb.replicate(n, 1)), ad::constant(vb.replicate(n, 1))};
  const Var z = reparameterize(an, rng.normal_matrix(n, 2));
  const Matrix diff = (log_density(an, z) - log_density(bn, z)).value();
  const double mc = diff.mean();
  const double se = std::sqrt((diff.array() - mc).square().mean() / n);
  EXPECT_NEAR(mc, closed, 5 * se);
}

TEST(Distributions, StandardNormalMatchesLogDensity) {
  Rng rng(3);
  const Matrix z = rng.normal_matrix(5, 3);
  const Matrix a = standard_normal_log_density(ad::constant(z)).value();
  const Matrix b = log_density(DiagGaussian::standard(5, 3), ad::constant(z)).value();
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(a(i, 0), -0.5 * z.row(i).squaredNorm() - 1.5 * kLog2Pi, 1e-12);
}

TEST(Distributions, LogVarianceIsClamped) {
  const auto q = DiagGaussian::from_raw(ad::constant(Matrix::Zero(1, 2)), ad::constant(Matrix::Constant(1, 2, 100.0)));
  EXPECT_DOUBLE_EQ(q.log_var.value()(0, 0), kLogVarMax);
}

TEST(Elbo, LinearGaussianGapEqualsKlToExactPosterior) {
  const auto lg = testing::make_linear_gaussian(2, 3, 7);
  Rng rng(8);
  const RowVector x = rng.normal_matrix(1, 3) * 1.5;
  const int n = 100000;
  const auto terms = elbo(lg.model, {x.replicate(n, 1)}, rng.normal_matrix(n, 2));
  const double mc = terms.elbo.scalar();
  const double se = std::sqrt((terms.per_sample.array() - mc).square().mean() / n);

  Vector m;
  Matrix c;
  lg.posterior(x, m, c);
  const auto q = lg.model.encode({Matrix(x)});
  const Vector qm = q.mean.value().row(0).transpose();
  const Matrix qc = q.log_var.value().row(0).array().exp().matrix().asDiagonal();
  const double expect = lg.log_marginal(x) - kl_full(qm, qc, m, c);
  EXPECT_NEAR(mc, expect, 5 * se + 1e-9);
  EXPECT_LT(mc, lg.log_marginal(x));
}

TEST(Elbo, ReparameterizedGradientMatchesFiniteDifferences) {
  const auto lg = testing::make_linear_gaussian(2, 3, 9);
  Rng rng(10);
  const Matrix x = rng.normal_matrix(4, 3);
  const Matrix eps = rng.normal_matrix(4, 2);
  JointModel model = lg.model;
  auto& bias = model.encoder().layer(0).bias();
  bias.zero_grad();
  ad::backward(elbo(model, {x}, eps).elbo);
  const Matrix analytic = bias.grad;
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < bias.value.size(); ++k) {
    const double orig = bias.value(k);
    bias.value(k) = orig + h;
    const double up = elbo(model, {x}, eps).elbo.scalar();
    bias.value(k) = orig - h;
    const double down = elbo(model, {x}, eps).elbo.scalar();
    bias.value(k) = orig;
    EXPECT_NEAR(analytic(k), (up - down) / (2 * h), 1e-6);
  }
}

TEST(Elbo, TrainingImprovesAndIsDeterministic) {
  data::ToyConfig tc;
  tc.image_side = 12;
  tc.size_min = 3;
  tc.size_max = 5;
  tc.n_samples = 256;
  const auto ds = data::generate_toy_dataset(tc);
  JointModelConfig cfg;
  cfg.encoder_hidden = {32};
  cfg.decoder_hidden = {32};
  nn::TrainConfig train;
  train.epochs = 6;
  train.batch_size = 32;
  train.seed = 4;
  train.adam.learning_rate = 3e-3;
  Rng r1(1), r2(1);
  JointModel a(ds.specs(), cfg, r1), b(ds.specs(), cfg, r2);
  const auto ha = train_step1(a, ds, train);
  const auto hb = train_step1(b, ds, train);
  EXPECT_GT(ha.back(), ha.front());
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(Elbo, NonFiniteLossIsReported) {
  try {
    check_finite_loss(std::nan(""), "joint", 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::training_diverged);
  }
}

TEST(JointModel, SaveLoadRoundTripIsExact) {
  const auto lg = testing::make_linear_gaussian(3, 5, 11);
  const auto dir = std::filesystem::temp_directory_path() / "jnf_test_joint_io";
  std::filesystem::remove_all(dir);
  lg.model.save(dir);
  const auto back = JointModel::load(dir);
  Rng rng(1);
  const Matrix x = rng.normal_matrix(4, 5);
  EXPECT_EQ(back.encode({x}).mean.value(), lg.model.encode({x}).mean.value());
  EXPECT_EQ(back.hash(), lg.model.hash());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace jnflow::vae
