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

#ifndef JNF_FLOW_MADE_HPP_
#define JNF_FLOW_MADE_HPP_

#include <string>
#include <vector>

#include "jnf/autodiff.hpp"
#include "jnf/random.hpp"

namespace jnflow::flow {

using ad::Var;

inline constexpr double kDefaultScaleClamp = 5.0;

struct FlowResult {
  Var out;
  /// Per-row log |det| of the forward map, (N x 1).
  Var log_det;
};

/// One masked autoregressive affine transform
///   v_j = u_j * exp(s_j) + t_j,   (s_j, t_j) = net(v_{<j}, context).
/// Coordinate j has degree j + 1.  Density evaluation (inverse) is one pass,
/// sampling (forward) takes d passes.  Hidden units use tanh and cycle
/// through degrees 0..d-1; degree-0 units see the context only.  The output
/// layer is zero-initialized so a fresh block is the identity.
class MadeBlock {
 public:
  MadeBlock() = default;
  MadeBlock(const std::string& name, int dim, int context_dim, std::vector<int> hidden, Rng& rng,
            double scale_clamp = kDefaultScaleClamp);

  /// Clamped log-scale and shift, each (N x d), as functions of v.
  std::pair<Var, Var> shift_scale(const Var& v, const Var& context) const;

  FlowResult forward(const Var& u, const Var& context) const;
  FlowResult inverse(const Var& v, const Var& context) const;

  int dim() const { return dim_; }
  int context_dim() const { return context_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  double scale_clamp() const { return scale_clamp_; }
  /// Input degrees (1..d) and per-layer hidden degrees.
  const std::vector<int>& input_degrees() const { return input_degrees_; }
  const std::vector<std::vector<int>>& hidden_degrees() const { return hidden_degrees_; }
  /// masks()[k] is applied elementwise to the k-th weight matrix; the last
  /// one covers the (s | t) output layer.
  const std::vector<Matrix>& masks() const { return masks_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  int dim_ = 0;
  int context_dim_ = 0;
  std::vector<int> hidden_;
  double scale_clamp_ = kDefaultScaleClamp;
  std::vector<int> input_degrees_;
  std::vector<std::vector<int>> hidden_degrees_;
  std::vector<Matrix> masks_;
  mutable std::vector<ad::Parameter> weights_;
  mutable std::vector<ad::Parameter> biases_;
  mutable ad::Parameter context_weight_;
};

}  // namespace jnflow::flow

#endif  // JNF_FLOW_MADE_HPP_
