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

#include "jnf/error.hpp"
#include "jnf/poe/hmc.hpp"
#include "jnf/poe/poe.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace jnflow::poe {
namespace {

Matrix random_cov(int d, Rng& rng) {
  const Matrix g = rng.normal_matrix(d, d);
  return g * g.transpose() / d + 0.5 * Matrix::Identity(d, d);
}

TEST(Hmc, GradientMatchesAnalyticGaussian) {
  Rng rng(1);
  const testing::GaussianTarget t(rng.normal_matrix(3, 1), random_cov(3, rng));
  const Matrix z = rng.normal_matrix(4, 3);
  const auto [lp, grad] = log_density_and_grad(t, z);
  for (int i = 0; i < 4; ++i) {
    const Vector r = z.row(i).transpose() - t.mean();
    EXPECT_NEAR(lp(i), -0.5 * r.dot(t.precision() * r), 1e-10);
    EXPECT_LT((grad.row(i).transpose() + t.precision() * r).cwiseAbs().maxCoeff(), 1e-10);
  }
}

double hamiltonian(const LogTarget& t, const Matrix& z, const Matrix& v) {
  return -log_density_and_grad(t, z).first(0) + 0.5 * v.squaredNorm();
}

TEST(Hmc, LeapfrogConservesEnergyToSecondOrder) {
  Rng rng(2);
  const testing::GaussianTarget t(Vector::Zero(2), random_cov(2, rng));
  const Matrix z = rng.normal_matrix(1, 2);
  const Matrix v = rng.normal_matrix(1, 2);
  const double h0 = hamiltonian(t, z, v);
  const auto coarse = leapfrog(t, z, v, 0.1, 10);
  const auto fine = leapfrog(t, z, v, 0.05, 20);
  const double e1 = std::abs(hamiltonian(t, coarse.z, coarse.v) - h0);
  const double e2 = std::abs(hamiltonian(t, fine.z, fine.v) - h0);
  EXPECT_LT(e1, 0.05);
  EXPECT_LT(e2, e1 / 2.5);
}

TEST(Hmc, LeapfrogIsReversible) {
  Rng rng(3);
  const testing::GaussianTarget t(Vector::Ones(3), random_cov(3, rng));
  const Matrix z = rng.normal_matrix(2, 3);
  const Matrix v = rng.normal_matrix(2, 3);
  const auto fwd = leapfrog(t, z, v, 0.1, 15);
  const auto back = leapfrog(t, fwd.z, -fwd.v, 0.1, 15);
  EXPECT_LT((back.z - z).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((back.v + v).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Hmc, SamplesStandardNormal) {
  const testing::GaussianTarget t(Vector::Zero(3), Matrix::Identity(3, 3));
  HmcConfig cfg;
  cfg.step_size = 0.3;
  cfg.leapfrog_steps = 5;
  cfg.samples_per_chain = 1500;
  cfg.seed = 4;
  const auto res = hmc_sample(t, cfg);
  ASSERT_EQ(res.samples.rows(), 8 * 1500);
  const auto [m, c] = testing::moments(res.samples);
  EXPECT_LT(m.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT((c - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.08);
  EXPECT_LT(res.diagnostics.psrf.maxCoeff(), 1.05);
  EXPECT_GT(res.diagnostics.mean_acceptance(), 0.6);
}

TEST(Hmc, SameSeedIsIdenticalAndChainsAreIndependentOfChainCount) {
  const testing::GaussianTarget t(Vector::Zero(2), Matrix::Identity(2, 2));
  HmcConfig cfg;
  cfg.samples_per_chain = 50;
  cfg.burn_in = 20;
  cfg.n_chains = 2;
  cfg.seed = 5;
  const auto a = hmc_sample(t, cfg);
  const auto b = hmc_sample(t, cfg);
  EXPECT_EQ(a.samples, b.samples);
  cfg.n_chains = 4;
  const auto c = hmc_sample(t, cfg);
  EXPECT_EQ(c.chain(1), a.chain(1));
}

TEST(Hmc, AdaptedMetricSamplesAnisotropicGaussian) {
  Vector var(3);
  var << 0.25, 1.0, 16.0;
  const Matrix cov = var.asDiagonal();
  const testing::GaussianTarget t(Vector::Ones(3), cov);
  HmcConfig cfg;
  cfg.adapt_metric = true;
  cfg.step_size = 0.25;
  cfg.leapfrog_steps = 6;
  cfg.step_jitter = 0.2;
  cfg.burn_in = 200;
  cfg.samples_per_chain = 1000;
  cfg.seed = 8;
  const auto res = hmc_sample(t, cfg);
  const auto [m, c] = testing::moments(res.samples);
  for (int j = 0; j < 3; ++j) {
    EXPECT_NEAR(m(j), 1.0, 0.06 * std::sqrt(var(j)));
    EXPECT_NEAR(c(j, j) / var(j), 1.0, 0.08);
  }
  EXPECT_GT(res.diagnostics.mean_acceptance(), 0.7);

  cfg.n_chains = 3;
  const auto fewer = hmc_sample(t, cfg);
  EXPECT_EQ(fewer.chain(2), res.chain(2));
}

TEST(Hmc, MetricAdaptationNeedsBurnIn) {
  HmcConfig cfg;
  cfg.adapt_metric = true;
  cfg.burn_in = 4;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Hmc, AllRejectedChainsAreDegenerate) {
  const testing::GaussianTarget t(Vector::Zero(2), Matrix::Identity(2, 2) * 0.01);
  HmcConfig cfg;
  cfg.step_size = 5.0;
  cfg.samples_per_chain = 50;
  cfg.burn_in = 10;
  try {
    hmc_sample(t, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::degenerate_chains || e.code() == ErrorCode::non_finite_gradient);
  }
}

TEST(Hmc, InvalidConfigIsRejected) {
  HmcConfig cfg;
  cfg.step_size = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = HmcConfig{};
  cfg.leapfrog_steps = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Hmc, SplitRhatDetectsDisagreeingChains) {
  Rng rng(6);
  const Matrix a = rng.normal_matrix(500, 1);
  const Matrix b = rng.normal_matrix(500, 1);
  EXPECT_LT(split_rhat({a, b})(0), 1.02);
  const Matrix shifted = b.array() + 2.0;
  EXPECT_GT(split_rhat({a, shifted})(0), 1.2);
}

TEST(Poe, SingleExpertEqualsExpertDensity) {
  Rng rng(7);
  flow::FlowConfig cfg;
  cfg.made_hidden = {16};
  cfg.encoder_hidden = {8};
  flow::FlowStack s("s", 3, 2, cfg, rng);
  testing::randomize_parameters(s.parameters(), rng, 0.3);
  const RowVector c = rng.normal_matrix(1, 3);
  PoeTarget t(2);
  t.add_expert(s, c);
  const Matrix z = rng.normal_matrix(5, 2);
  const Matrix expect = s.log_density(ad::constant(z), ad::constant(Matrix(c.replicate(5, 1)))).value();
  EXPECT_LT((t.log_density(ad::constant(z)).value() - expect).cwiseAbs().maxCoeff(), 1e-12);
}

struct GaussianPoe {
  Vector mean;
  Matrix cov;
};

// Product of diagonal Gaussian experts divided by the prior |S| - 1 times.
GaussianPoe analytic_poe(const std::vector<Vector>& means, const std::vector<Vector>& vars) {
  const auto d = means[0].size();
  Vector precision = Vector::Constant(d, -(static_cast<double>(means.size()) - 1.0));
  Vector weighted = Vector::Zero(d);
  for (std::size_t i = 0; i < means.size(); ++i) {
    precision += vars[i].cwiseInverse();
    weighted += means[i].cwiseQuotient(vars[i]);
  }
  return {weighted.cwiseQuotient(precision), Matrix(precision.cwiseInverse().asDiagonal())};
}

TEST(Poe, GaussianExpertsGiveAnalyticProductUpToConstant) {
  Rng rng(8);
  std::vector<Vector> means, vars;
  std::vector<flow::FlowStack> stacks;
  for (int i = 0; i < 3; ++i) {
    means.push_back(rng.normal_matrix(2, 1));
    vars.push_back((rng.uniform_matrix(2, 1, -1.0, 0.0).array() * std::log(10.0)).exp().matrix());
    stacks.push_back(testing::fixed_gaussian(means.back(), vars.back().array().log().matrix()));
  }
  PoeTarget t(2);
  for (const auto& s : stacks) t.add_expert(s, RowVector::Zero(1));
  const auto ref = analytic_poe(means, vars);
  const Matrix z = rng.normal_matrix(10, 2);
  const Matrix lp = t.log_density(ad::constant(z)).value();
  Vector diff(10);
  for (int i = 0; i < 10; ++i) diff(i) = lp(i, 0) - testing::gaussian_log_density(z.row(i).transpose(), ref.mean, ref.cov);
  EXPECT_LT(diff.maxCoeff() - diff.minCoeff(), 1e-10);
}

TEST(Poe, HmcRecoversGaussianProductMoments) {
  Vector m1(2), m2(2), v1(2), v2(2);
  m1 << 0.5, -0.3;
  m2 << 0.2, 0.4;
  v1 << 0.4, 0.6;
  v2 << 0.5, 0.3;
  const auto e1 = testing::fixed_gaussian(m1, v1.array().log().matrix());
  const auto e2 = testing::fixed_gaussian(m2, v2.array().log().matrix());
  PoeTarget t(2);
  t.add_expert(e1, RowVector::Zero(1));
  t.add_expert(e2, RowVector::Zero(1));
  const auto ref = analytic_poe({m1, m2}, {v1, v2});
  HmcConfig cfg;
  // Trajectory near a quarter period of the widest coordinate.
  cfg.step_size = 0.08;
  cfg.step_jitter = 0.2;
  cfg.samples_per_chain = 1500;
  cfg.seed = 9;
  const auto res = hmc_sample(t, cfg);
  const auto [m, c] = testing::moments(res.samples);
  EXPECT_LT((m - ref.mean).cwiseAbs().maxCoeff(), 0.03);
  EXPECT_LT((c - ref.cov).norm() / ref.cov.norm(), 0.05);
}

TEST(Poe, ZeroRequestedSamplesGiveEmptyOutput) {
  const auto lg = testing::make_linear_gaussian(2, 3, 10);
  const auto e = testing::fixed_gaussian(Vector::Zero(2), Vector::Zero(2));
  PoeTarget t(2);
  t.add_expert(e, RowVector::Zero(1));
  HmcConfig cfg;
  cfg.samples_per_chain = 10;
  cfg.burn_in = 5;
  const Matrix out = conditional_generate_subset(lg.model, t, cfg, 0, 0);
  EXPECT_EQ(out.rows(), 0);
  const Matrix some = conditional_generate_subset(lg.model, t, cfg, 0, 7);
  EXPECT_EQ(some.rows(), 7);
  EXPECT_EQ(some.cols(), 3);
}

}  // namespace
}  // namespace jnflow::poe
