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

#ifndef JNF_FLOW_FLOW_STACK_HPP_
#define JNF_FLOW_FLOW_STACK_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "jnf/flow/made.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/nn.hpp"
#include "jnf/vae/distributions.hpp"

namespace jnflow::flow {

struct FlowConfig {
  int n_blocks = 2;
  std::vector<int> made_hidden{128, 128, 128};
  /// Blocks read the base encoder's last hidden features as context.
  bool conditional = true;
  std::vector<int> encoder_hidden{256, 256};
  nn::Activation activation = nn::Activation::relu;
  double scale_clamp = kDefaultScaleClamp;
};

/// q(z | c) = base Gaussian E(c) pushed through K MADE blocks, with the
/// coordinates reversed before every block but the first:
///   z_0 ~ N(mu(c), diag sigma^2(c)),  z_k = f_k(P_k z_{k-1}).
class FlowStack {
 public:
  FlowStack() = default;
  FlowStack(const std::string& name, int input_dim, int latent_dim, FlowConfig cfg, Rng& rng);

  struct Conditioning {
    vae::DiagGaussian base;
    Var context;
  };
  Conditioning condition(const Var& input) const;

  /// Per-row log q(z | input), (N x 1).
  Var log_density(const Var& z, const Var& input) const;
  Var log_density(const Var& z, const Conditioning& c) const;

  struct Draw {
    Var z;
    Var log_q;
  };
  /// One reparameterized draw per input row using base noise `eps` (N x d).
  Draw sample(const Var& input, const Matrix& eps) const;
  /// n draws for a single conditioning row.
  Matrix sample(const RowVector& input, int n, Rng& rng) const;

  int input_dim() const { return input_dim_; }
  int latent_dim() const { return latent_dim_; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const FlowConfig& config() const { return cfg_; }
  const MadeBlock& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<int>& permutation(std::size_t k) const { return permutations_.at(k); }
  nn::Mlp& base_encoder() { return base_; }
  const nn::Mlp& base_encoder() const { return base_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

  /// Masks, degrees, permutations and parameters; density evaluation after
  /// load() is bit-identical.
  void save(const std::filesystem::path& dir) const;
  static FlowStack load(const std::filesystem::path& dir);

 private:
  std::string name_;
  int input_dim_ = 0;
  int latent_dim_ = 0;
  FlowConfig cfg_;
  nn::Mlp base_;
  std::vector<MadeBlock> blocks_;
  std::vector<std::vector<int>> permutations_;
};

}  // namespace jnflow::flow

#endif  // JNF_FLOW_FLOW_STACK_HPP_
