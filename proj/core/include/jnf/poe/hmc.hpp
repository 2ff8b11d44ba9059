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

#ifndef JNF_POE_HMC_HPP_
#define JNF_POE_HMC_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "jnf/autodiff.hpp"
#include "jnf/io/archive.hpp"

namespace jnflow::poe {

using ad::Var;

/// Unnormalized log-density over R^d, evaluated row-wise on (N x d).
class LogTarget {
 public:
  virtual ~LogTarget() = default;
  virtual Var log_density(const Var& z) const = 0;
  virtual int dim() const = 0;
};

/// log f(z) per row and its gradient with respect to z, without touching any
/// parameter gradient.
std::pair<Vector, Matrix> log_density_and_grad(const LogTarget& target, const Matrix& z);

struct HmcConfig {
  double step_size = 0.05;
  int leapfrog_steps = 10;
  int n_chains = 8;
  int burn_in = 200;
  int samples_per_chain = 1000;
  std::uint64_t seed = 0;
  /// Step size per iteration drawn from step_size * [1 - j, 1 + j].
  double step_jitter = 0.0;
  /// Dual-averaging iterations run before burn-in to tune step_size.
  int adapt_steps = 0;
  /// Diagonal metric estimated per chain from its burn-in (second quarter),
  /// in effect from the middle of burn-in on.  step_size is then in units of
  /// the estimated standard deviations.  Until then the metric is the
  /// identity, so step_size must also be stable in the original coordinates.
  bool adapt_metric = false;
  double target_accept = 0.8;

  void validate() const;
};

struct PhaseState {
  Matrix z;
  Matrix v;
};

/// l leapfrog steps of size eps for H(z, v) = -log f(z) + |v|^2 / 2.
/// Throws non_finite_gradient when the trajectory leaves the finite range.
PhaseState leapfrog(const LogTarget& target, const Matrix& z, const Matrix& v, double eps, int l);

struct HmcDiagnostics {
  std::vector<double> acceptance;  // per chain, post burn-in
  Vector psrf;                     // split-chain R-hat per coordinate
  double step_size = 0.0;
  int leapfrog_steps = 0;
  int n_chains = 0;
  int samples_per_chain = 0;
  std::uint64_t seed = 0;

  double mean_acceptance() const;
  io::Manifest to_manifest() const;
};

struct HmcResult {
  /// (n_chains * samples_per_chain) x d, chain c occupying rows
  /// [c * samples_per_chain, (c + 1) * samples_per_chain).
  Matrix samples;
  HmcDiagnostics diagnostics;

  Matrix chain(int c) const;
};

/// Chains start from N(0, I); momenta are redrawn every iteration and
/// proposals accepted with probability min(1, exp(H0 - H')).  Each chain uses
/// its own random stream derived from (seed, chain), so results do not depend
/// on how many chains run together.  Throws degenerate_chains if the mean
/// post-burn-in acceptance rate is below 0.01.
HmcResult hmc_sample(const LogTarget& target, const HmcConfig& cfg);

/// Split-chain potential scale reduction per coordinate.
Vector split_rhat(const std::vector<Matrix>& chains);

}  // namespace jnflow::poe

#endif  // JNF_POE_HMC_HPP_
