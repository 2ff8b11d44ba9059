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

#ifndef JNF_VAE_JOINT_MODEL_HPP_
#define JNF_VAE_JOINT_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jnf/data/dataset.hpp"
#include "jnf/io/archive.hpp"
#include "jnf/nn.hpp"
#include "jnf/vae/distributions.hpp"

namespace jnflow::vae {

struct JointModelConfig {
  int latent_dim = 2;
  std::vector<int> encoder_hidden{256, 256};
  std::vector<int> decoder_hidden{256, 256};
  nn::Activation activation = nn::Activation::relu;
  /// One weight per modality; empty means all ones.
  std::vector<double> reconstruction_weights;
};

/// Joint encoder q(z | x_1..x_m) over the concatenated modalities and one
/// decoder per modality producing likelihood parameters.
class JointModel {
 public:
  JointModel() = default;
  JointModel(std::vector<data::ModalitySpec> specs, JointModelConfig cfg, Rng& rng);

  DiagGaussian encode(const std::vector<Matrix>& xs) const;
  Var decode(std::size_t modality, const Var& z) const;

  int latent_dim() const { return cfg_.latent_dim; }
  std::size_t num_modalities() const { return specs_.size(); }
  const std::vector<data::ModalitySpec>& specs() const { return specs_; }
  const JointModelConfig& config() const { return cfg_; }
  double reconstruction_weight(std::size_t i) const { return cfg_.reconstruction_weights[i]; }

  nn::Mlp& encoder() { return encoder_; }
  nn::Mlp& decoder(std::size_t i) { return decoders_[i]; }
  const nn::Mlp& encoder() const { return encoder_; }
  const nn::Mlp& decoder(std::size_t i) const { return decoders_[i]; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::uint64_t hash() const { return nn::hash_parameters(parameters()); }

  /// Writes manifest.txt (architecture, specs, weights, plus `extra`) and the
  /// parameter archive.
  void save(const std::filesystem::path& dir, const io::Manifest& extra = {}) const;
  static JointModel load(const std::filesystem::path& dir);

 private:
  std::vector<data::ModalitySpec> specs_;
  JointModelConfig cfg_;
  nn::Mlp encoder_;
  std::vector<nn::Mlp> decoders_;
};

/// Writes/reads "<prefix><i>.{name,shape,likelihood}" for each spec.
void write_specs(io::Manifest& m, const std::string& prefix, const std::vector<data::ModalitySpec>& specs);
std::vector<data::ModalitySpec> read_specs(const io::Manifest& m, const std::string& prefix);

std::string format_ints(const std::vector<int>& v);
std::vector<int> parse_ints(const std::string& text);
std::string format_doubles(const std::vector<double>& v);
std::vector<double> parse_doubles(const std::string& text);

}  // namespace jnflow::vae

#endif  // JNF_VAE_JOINT_MODEL_HPP_
