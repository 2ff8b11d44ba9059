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

#include "jnf/eval/fid.hpp"

#include <Eigen/Eigenvalues>

#include "jnf/error.hpp"

namespace jnflow::eval {

Matrix psd_sqrt(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (s + s.transpose()));
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double fid_from_moments(const Vector& mu_r, const Matrix& sigma_r, const Vector& mu_g, const Matrix& sigma_g) {
  if (mu_r.size() != mu_g.size() || sigma_r.rows() != mu_r.size() || sigma_g.rows() != mu_g.size()) {
    throw Error(ErrorCode::dimension_mismatch, "FID moments have inconsistent dimensions");
  }
  const Matrix root_r = psd_sqrt(sigma_r);
  Eigen::SelfAdjointEigenSolver<Matrix> es(root_r * sigma_g * root_r);
  const double cross = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  const double value = (mu_r - mu_g).squaredNorm() + sigma_r.trace() + sigma_g.trace() - 2.0 * cross;
  return std::max(value, 0.0);
}

namespace {

void moments(const Matrix& x, Vector& mu, Matrix& sigma) {
  mu = x.colwise().mean().transpose();
  const Matrix c = x.rowwise() - mu.transpose();
  sigma = c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

double fid(const Matrix& real_features, const Matrix& generated_features) {
  if (real_features.cols() != generated_features.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "FID feature sets have different widths");
  }
  const Eigen::Index d = real_features.cols();
  if (real_features.rows() < d + 1 || generated_features.rows() < d + 1) {
    throw Error(ErrorCode::insufficient_samples,
                "FID needs at least " + std::to_string(d + 1) + " samples per set");
  }
  Vector mr, mg;
  Matrix sr, sg;
  moments(real_features, mr, sr);
  moments(generated_features, mg, sg);
  return fid_from_moments(mr, sr, mg, sg);
}

}  // namespace jnflow::eval
