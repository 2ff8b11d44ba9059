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

#include "jnf/dcca/cca.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

#include "jnf/error.hpp"

namespace jnflow::dcca {

namespace {

Matrix center(const Matrix& h) { return h.rowwise() - h.colwise().mean(); }

struct SymEig {
  Vector values;
  Matrix vectors;
};

SymEig regularized_eig(const Matrix& s, double r) {
  Matrix reg = 0.5 * (s + s.transpose());
  reg.diagonal().array() += r;
  Eigen::SelfAdjointEigenSolver<Matrix> es(reg);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite() || es.eigenvalues().minCoeff() <= 0.0) {
    throw Error(ErrorCode::not_positive_definite, "covariance is not positive definite after regularization");
  }
  return {es.eigenvalues().cwiseMax(kEigenFloor), es.eigenvectors()};
}

Matrix inv_sqrt_from(const SymEig& e) {
  return e.vectors * e.values.cwiseSqrt().cwiseInverse().asDiagonal() * e.vectors.transpose();
}

// Gradient of a scalar through A = S^{-1/2} given dF/dA, for symmetric S.
Matrix inv_sqrt_backward(const SymEig& e, const Matrix& grad_a) {
  const Eigen::Index n = e.values.size();
  const Vector f = e.values.cwiseSqrt().cwiseInverse();
  Matrix l(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double li = e.values(i);
      const double lj = e.values(j);
      if (std::abs(li - lj) <= 1e-12 * std::max(li, lj)) {
        l(i, j) = -0.5 * f(i) / li;
      } else {
        l(i, j) = (f(i) - f(j)) / (li - lj);
      }
    }
  }
  const Matrix g = 0.5 * (grad_a + grad_a.transpose());
  const Matrix inner = (e.vectors.transpose() * g * e.vectors).cwiseProduct(l);
  return e.vectors * inner * e.vectors.transpose();
}

}  // namespace

CovarianceTriple covariance_triple(const Matrix& h1, const Matrix& h2, double r) {
  if (h1.rows() != h2.rows()) throw Error(ErrorCode::shape_mismatch, "CCA streams have different sample counts");
  if (h1.rows() < 2) throw Error(ErrorCode::batch_too_small, "CCA needs at least two samples");
  const Matrix c1 = center(h1);
  const Matrix c2 = center(h2);
  const double norm = 1.0 / static_cast<double>(h1.rows() - 1);
  return {norm * c1.transpose() * c1, norm * c2.transpose() * c2, norm * c1.transpose() * c2, r};
}

Matrix inverse_sqrt(const Matrix& s, double r) { return inv_sqrt_from(regularized_eig(s, r)); }

CcaResult total_correlation(const CovarianceTriple& cov) {
  CcaResult res;
  res.whiten_1 = inverse_sqrt(cov.sigma_1, cov.r);
  res.whiten_2 = inverse_sqrt(cov.sigma_2, cov.r);
  const Matrix t = res.whiten_1 * cov.sigma_12 * res.whiten_2;
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  res.singular_values = svd.singularValues();
  res.u = svd.matrixU();
  res.v = svd.matrixV();
  res.total = res.singular_values.sum();
  return res;
}

ad::Var total_correlation(const ad::Var& h1, const ad::Var& h2, double r) {
  const Eigen::Index n = h1.rows();
  if (n <= std::max(h1.cols(), h2.cols())) {
    throw Error(ErrorCode::batch_too_small, "DCCA batch of " + std::to_string(n) +
                                                " samples cannot estimate covariances of dimension " +
                                                std::to_string(std::max(h1.cols(), h2.cols())));
  }
  const Matrix c1 = center(h1.value());
  const Matrix c2 = center(h2.value());
  const double norm = 1.0 / static_cast<double>(n - 1);
  const Matrix s1 = norm * c1.transpose() * c1;
  const Matrix s2 = norm * c2.transpose() * c2;
  const Matrix s12 = norm * c1.transpose() * c2;
  const SymEig e1 = regularized_eig(s1, r);
  const SymEig e2 = regularized_eig(s2, r);
  const Matrix a = inv_sqrt_from(e1);
  const Matrix b = inv_sqrt_from(e2);
  const Matrix t = a * s12 * b;
  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double f = svd.singularValues().sum();

  Matrix value(1, 1);
  value(0, 0) = f;
  return ad::custom(value, {h1, h2}, [=](const Matrix& g) {
    const double scale = g(0, 0);
    const Matrix gt = svd.matrixU() * svd.matrixV().transpose();
    const Matrix g12 = a * gt * b;
    const Matrix ga = gt * (s12 * b).transpose();
    const Matrix gb = (a * s12).transpose() * gt;
    const Matrix g1 = inv_sqrt_backward(e1, ga);
    const Matrix g2 = inv_sqrt_backward(e2, gb);
    Matrix d1 = norm * (2.0 * c1 * g1 + c2 * g12.transpose());
    Matrix d2 = norm * (2.0 * c2 * g2 + c1 * g12);
    d1 = center(d1);
    d2 = center(d2);
    return std::vector<Matrix>{scale * d1, scale * d2};
  });
}

}  // namespace jnflow::dcca
