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

#ifndef JNF_NN_HPP_
#define JNF_NN_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "jnf/autodiff.hpp"
#include "jnf/random.hpp"

namespace jnflow::nn {

using ad::Parameter;
using ad::Var;

enum class Activation { identity, relu, sigmoid, tanh };

Var activate(const Var& x, Activation act);
Activation parse_activation(const std::string& name);
const char* to_string(Activation act);

/// y = x W + b with W stored as (in x out).
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, int in, int out, Rng& rng);

  Var operator()(const Var& x) const;
  int in_features() const { return static_cast<int>(weight_.value.rows()); }
  int out_features() const { return static_cast<int>(weight_.value.cols()); }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  // Graph leaves need a mutable binding; evaluation itself never mutates.
  mutable Parameter weight_;
  mutable Parameter bias_;
};

/// Feed-forward stack.  widths = {in, h1, ..., out}; the hidden activation is
/// applied after every layer except the last, which uses `output`.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::vector<int> widths, Activation hidden, Activation output, Rng& rng);

  Var operator()(const Var& x) const;
  /// Output of the last hidden layer (the input itself when there is none).
  Var features(const Var& x) const;
  /// Applies only the final layer (+ output activation) to features().
  Var head(const Var& features) const;

  int in_features() const { return widths_.front(); }
  int out_features() const { return widths_.back(); }
  int feature_dim() const { return widths_[widths_.size() - 2]; }
  const std::vector<int>& widths() const { return widths_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  Linear& layer(std::size_t i) { return layers_[i]; }
  std::size_t num_layers() const { return layers_.size(); }

 private:
  std::vector<int> widths_;
  std::vector<Linear> layers_;
  Activation hidden_ = Activation::relu;
  Activation output_ = Activation::identity;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; <= 0 disables.
  double clip_norm = 0.0;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg);

  void zero_grad();
  void step();
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  AdamConfig cfg_;
  long t_ = 0;
};

/// Settings shared by every gradient-based trainer.
struct TrainConfig {
  int epochs = 100;
  int batch_size = 128;
  AdamConfig adam;
  std::uint64_t seed = 0;
  /// Called after each epoch with (epoch index, mean epoch loss).
  std::function<void(int, double)> on_epoch;
};

void zero_grad(const std::vector<Parameter*>& params);
bool all_finite(const std::vector<Parameter*>& params);

/// FNV-1a over the raw bytes of every parameter (names included).
std::uint64_t hash_parameters(const std::vector<const Parameter*>& params);

template <class Range>
std::vector<const Parameter*> as_const(const Range& params) {
  return std::vector<const Parameter*>(params.begin(), params.end());
}

}  // namespace jnflow::nn

#endif  // JNF_NN_HPP_
