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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "jnf/dcca/cca.hpp"
#include "jnf/dcca/projection.hpp"
#include "jnf/error.hpp"
#include "support/oracles.hpp"

namespace jnflow::dcca {
namespace {

// Canonical correlations as square roots of the eigenvalues of
// (S1+rI)^-1 S12 (S2+rI)^-1 S21, descending.
Vector reference_correlations(const Matrix& h1, const Matrix& h2, double r) {
  const Matrix c1 = h1.rowwise() - h1.colwise().mean();
  const Matrix c2 = h2.rowwise() - h2.colwise().mean();
  const double n = static_cast<double>(h1.rows() - 1);
  const Matrix s1 = c1.transpose() * c1 / n + r * Matrix::Identity(h1.cols(), h1.cols());
  const Matrix s2 = c2.transpose() * c2 / n + r * Matrix::Identity(h2.cols(), h2.cols());
  const Matrix s12 = c1.transpose() * c2 / n;
  const Matrix m = s1.inverse() * s12 * s2.inverse() * s12.transpose();
  const Eigen::EigenSolver<Matrix> es(m);
  std::vector<double> ev;
  for (Eigen::Index i = 0; i < m.rows(); ++i) ev.push_back(std::sqrt(std::max(0.0, es.eigenvalues()(i).real())));
  std::sort(ev.rbegin(), ev.rend());
  const auto k = std::min(h1.cols(), h2.cols());
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) out(i) = ev[static_cast<std::size_t>(i)];
  return out;
}

// Random well-conditioned map: orthogonal times a diagonal in [1, 2].
Matrix mixing(int k, Rng& rng) {
  const Eigen::HouseholderQR<Matrix> qr(rng.normal_matrix(k, k));
  const Matrix q = qr.householderQ();
  return q * Vector::LinSpaced(k, 1.0, 2.0).asDiagonal();
}

// Two views with canonical correlations rho, mixed by random invertible maps.
std::pair<Matrix, Matrix> planted(const std::vector<double>& rho, int n, Rng& rng) {
  const int k = static_cast<int>(rho.size());
  const Matrix s = rng.normal_matrix(n, k);
  const Matrix noise = rng.normal_matrix(n, k);
  Matrix t(n, k);
  for (int j = 0; j < k; ++j) t.col(j) = rho[j] * s.col(j) + std::sqrt(1 - rho[j] * rho[j]) * noise.col(j);
  return {s * mixing(k, rng), t * mixing(k, rng)};
}

TEST(Cca, IdenticalViewsAreFullyCorrelated) {
  Rng rng(1);
  const Matrix h = rng.normal_matrix(2000, 3);
  const auto res = total_correlation(covariance_triple(h, h, 1e-6));
  EXPECT_NEAR(res.total, 3.0, 1e-4);
}

TEST(Cca, IndependentViewsAreNearlyUncorrelated) {
  Rng rng(2);
  const auto res = total_correlation(covariance_triple(rng.normal_matrix(20000, 2), rng.normal_matrix(20000, 2)));
  EXPECT_LT(res.total, 0.05);
}

TEST(Cca, RecoversPlantedCorrelations) {
  Rng rng(3);
  const auto [h1, h2] = planted({0.9, 0.5, 0.0, 0.0}, 20000, rng);
  const auto res = total_correlation(covariance_triple(h1, h2));
  EXPECT_NEAR(res.singular_values(0), 0.9, 0.02);
  EXPECT_NEAR(res.singular_values(1), 0.5, 0.03);
  EXPECT_LT(res.singular_values(2), 0.05);
}

TEST(Cca, SingularValuesMatchEigenvalueReference) {
  Rng rng(4);
  const auto [h1, h2] = planted({0.8, 0.3, 0.1}, 500, rng);
  const auto res = total_correlation(covariance_triple(h1, h2, 1e-3));
  const Vector ref = reference_correlations(h1, h2, 1e-3);
  EXPECT_LT((res.singular_values - ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Cca, InvariantToInvertibleAffineMaps) {
  Rng rng(5);
  const auto [h1, h2] = planted({0.7, 0.4}, 1000, rng);
  const Matrix m = rng.normal_matrix(2, 2) + 3.0 * Matrix::Identity(2, 2);
  const RowVector c = rng.normal_matrix(1, 2) * 10.0;
  const Matrix h1m = (h1 * m).rowwise() + c;
  const double a = total_correlation(covariance_triple(h1, h2, 1e-10)).total;
  const double b = total_correlation(covariance_triple(h1m, h2, 1e-10)).total;
  EXPECT_NEAR(a, b, 1e-8);
}

TEST(Cca, WhiteningMakesCanonicalDirectionsOrthonormal) {
  Rng rng(6);
  const auto [h1, h2] = planted({0.9, 0.2, 0.1}, 3000, rng);
  const auto cov = covariance_triple(h1, h2, 0.0);
  const auto res = total_correlation(cov);
  const Matrix a = res.whiten_1 * res.u;
  const Matrix b = res.whiten_2 * res.v;
  EXPECT_TRUE((a.transpose() * cov.sigma_1 * a).isApprox(Matrix::Identity(3, 3), 1e-6));
  const Matrix cross = a.transpose() * cov.sigma_12 * b;
  EXPECT_TRUE(cross.isApprox(Matrix(res.singular_values.asDiagonal()), 1e-6));
}

TEST(Cca, InverseSqrtSquaresToInverse) {
  Rng rng(7);
  const Matrix g = rng.normal_matrix(4, 4);
  const Matrix s = g * g.transpose();
  const Matrix is = inverse_sqrt(s, 0.1);
  EXPECT_TRUE((is * is * (s + 0.1 * Matrix::Identity(4, 4))).isApprox(Matrix::Identity(4, 4), 1e-10));
}

TEST(Cca, InverseSqrtRejectsNonFinite) {
  Matrix s = Matrix::Identity(2, 2);
  s(0, 1) = s(1, 0) = std::nan("");
  EXPECT_THROW(inverse_sqrt(s, 1e-3), Error);
}

TEST(Cca, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  const auto [h1, h2] = planted({0.8, 0.4, 0.2}, 12, rng);
  const double r = 1e-2;
  const ad::Var v1 = ad::variable(h1);
  const ad::Var v2 = ad::variable(h2);
  ad::backward(total_correlation(v1, v2, r));
  const Matrix g1 = v1.grad();
  const Matrix g2 = v2.grad();
  const double h = 1e-6;
  Matrix p = h1;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double o = p(i);
    p(i) = o + h;
    const double up = total_correlation(covariance_triple(p, h2, r)).total;
    p(i) = o - h;
    const double down = total_correlation(covariance_triple(p, h2, r)).total;
    p(i) = o;
    EXPECT_NEAR(g1(i), (up - down) / (2 * h), 1e-6);
  }
  Matrix q = h2;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double o = q(i);
    q(i) = o + h;
    const double up = total_correlation(covariance_triple(h1, q, r)).total;
    q(i) = o - h;
    const double down = total_correlation(covariance_triple(h1, q, r)).total;
    q(i) = o;
    EXPECT_NEAR(g2(i), (up - down) / (2 * h), 1e-6);
  }
}

TEST(Cca, SmallBatchIsRejected) {
  Rng rng(9);
  try {
    total_correlation(ad::variable(rng.normal_matrix(4, 4)), ad::variable(rng.normal_matrix(4, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::batch_too_small);
  }
}

TEST(DimPolicy, ElbowKeepsValuesStrictlyAboveThreshold) {
  Vector s(4);
  s << 0.9, 0.5, 0.3, 0.1;
  EXPECT_EQ(select_embedding_dim(s, {}), 2);
  Vector t(2);
  t << 1.0, 0.5;
  EXPECT_EQ(select_embedding_dim(t, {}), 1);
  EXPECT_EQ(select_embedding_dim(Vector::Zero(3), {}), 1);
}

TEST(DimPolicy, FixedIsClampedToSpectrumLength) {
  Vector s(3);
  s << 0.9, 0.5, 0.3;
  DimPolicy p;
  p.kind = DimPolicy::Kind::fixed;
  p.k = 2;
  EXPECT_EQ(select_embedding_dim(s, p), 2);
  p.k = 10;
  EXPECT_EQ(select_embedding_dim(s, p), 3);
}

DccaProjectionSet small_set(std::uint64_t seed, int out = 3) {
  std::vector<data::ModalitySpec> specs{{"a", {4}, data::LikelihoodFamily::gaussian_unit_variance},
                                        {"b", {5}, data::LikelihoodFamily::gaussian_unit_variance}};
  DccaConfig cfg;
  cfg.output_dim = out;
  cfg.hidden = {16};
  Rng rng(seed);
  return DccaProjectionSet(specs, cfg, rng);
}

TEST(Projection, EmbeddingsAreCanonicallyAligned) {
  auto set = small_set(10);
  Rng rng(11);
  const Matrix shared = rng.normal_matrix(3000, 2);
  const Matrix xa = shared * rng.normal_matrix(2, 4) + 0.3 * rng.normal_matrix(3000, 4);
  const Matrix xb = shared * rng.normal_matrix(2, 5) + 0.3 * rng.normal_matrix(3000, 5);
  set.fit_rotation({xa, xb});
  const Matrix ea = embed(set, 0, xa, 3);
  const Matrix eb = embed(set, 1, xb, 3);
  const double n = static_cast<double>(ea.rows() - 1);
  const Matrix cross = ea.transpose() * eb / n;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(cross(i, i), set.spectrum()(i), 1e-2);
    for (int j = 0; j < 3; ++j)
      if (i != j) {
        EXPECT_NEAR(cross(i, j), 0.0, 1e-2);
      }
  }
  EXPECT_GE(set.spectrum()(0), set.spectrum()(1));
  EXPECT_EQ(embed(set, 0, xa, 1).cols(), 1);
}

TEST(Projection, TrainingIncreasesCorrelationAndSaveLoadRoundTrips) {
  auto set = small_set(12, 2);
  Rng rng(13);
  const int n = 1200;
  const Matrix shared = rng.normal_matrix(n, 1);
  const Matrix xa = (shared * rng.normal_matrix(1, 4)).array().tanh().matrix() + 0.5 * rng.normal_matrix(n, 4);
  const Matrix xb = (shared * rng.normal_matrix(1, 5)).array().sin().matrix() + 0.5 * rng.normal_matrix(n, 5);
  std::vector<int> labels(n, 0);
  data::MultimodalDataset ds(set.specs(), {xa, xb}, labels);
  const auto [train, val] = ds.split(900);
  nn::TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 300;
  cfg.seed = 1;
  const auto losses = train_dcca(set, train, val, cfg);
  EXPECT_LT(losses.back(), losses.front());
  ASSERT_TRUE(set.fitted());

  const auto dir = std::filesystem::temp_directory_path() / "jnf_test_dcca_io";
  std::filesystem::remove_all(dir);
  set.save(dir);
  const auto back = DccaProjectionSet::load(dir);
  EXPECT_EQ(embed(back, 1, xb), embed(set, 1, xb));
  EXPECT_EQ(back.spectrum(), set.spectrum());
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace jnflow::dcca
