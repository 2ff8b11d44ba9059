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

#ifndef JNF_DCCA_CCA_HPP_
#define JNF_DCCA_CCA_HPP_

#include "jnf/autodiff.hpp"

namespace jnflow::dcca {

inline constexpr double kDefaultRegularizer = 1e-3;
inline constexpr double kEigenFloor = 1e-9;

/// Batch covariances of two centered streams, 1/(N-1) normalization.  The
/// regularizer is added to the diagonal blocks when whitening.
struct CovarianceTriple {
  Matrix sigma_1;
  Matrix sigma_2;
  Matrix sigma_12;
  double r = kDefaultRegularizer;
};

CovarianceTriple covariance_triple(const Matrix& h1, const Matrix& h2, double r = kDefaultRegularizer);

/// (S + rI)^{-1/2} via the symmetric eigendecomposition with eigenvalues
/// floored at kEigenFloor.  Throws not_positive_definite on a non-finite or
/// non-positive spectrum.
Matrix inverse_sqrt(const Matrix& s, double r);

struct CcaResult {
  double total = 0.0;
  /// Descending.
  Vector singular_values;
  /// T = A S12 B = U diag(s) V^T; A U and B V are the canonical directions.
  Matrix whiten_1;
  Matrix whiten_2;
  Matrix u;
  Matrix v;
};

/// F = sum of singular values of T = (S1 + rI)^{-1/2} S12 (S2 + rI)^{-1/2}.
CcaResult total_correlation(const CovarianceTriple& cov);

/// Differentiable F(h1, h2) for batch outputs h1 (N x o1), h2 (N x o2);
/// returns a 1x1 node.  Throws batch_too_small when N <= max(o1, o2).
ad::Var total_correlation(const ad::Var& h1, const ad::Var& h2, double r = kDefaultRegularizer);

}  // namespace jnflow::dcca

#endif  // JNF_DCCA_CCA_HPP_
