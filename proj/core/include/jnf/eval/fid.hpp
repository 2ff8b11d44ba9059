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

#ifndef JNF_EVAL_FID_HPP_
#define JNF_EVAL_FID_HPP_

#include "jnf/autodiff.hpp"

namespace jnflow::eval {

/// |mu_r - mu_g|^2 + Tr(S_r + S_g - 2 (S_r^{1/2} S_g S_r^{1/2})^{1/2}),
/// square roots by symmetric eigendecomposition with eigenvalues floored at 0.
double fid_from_moments(const Vector& mu_r, const Matrix& sigma_r, const Vector& mu_g, const Matrix& sigma_g);

/// Fits Gaussians (1/(N-1) covariance) to two feature sets (rows = samples).
/// Throws insufficient_samples unless both have more rows than columns.
double fid(const Matrix& real_features, const Matrix& generated_features);

/// Symmetric PSD square root, eigenvalues floored at 0.
Matrix psd_sqrt(const Matrix& s);

}  // namespace jnflow::eval

#endif  // JNF_EVAL_FID_HPP_
