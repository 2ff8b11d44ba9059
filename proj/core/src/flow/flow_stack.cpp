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

#include "jnf/flow/flow_stack.hpp"

#include <numeric>

#include "jnf/error.hpp"
#include "jnf/vae/joint_model.hpp"

namespace jnflow::flow {

FlowStack::FlowStack(const std::string& name, int input_dim, int latent_dim, FlowConfig cfg, Rng& rng)
    : name_(name), input_dim_(input_dim), latent_dim_(latent_dim), cfg_(std::move(cfg)) {
  if (input_dim < 1 || latent_dim < 1) throw Error(ErrorCode::invalid_config, name + ": dimensions must be >= 1");
  if (cfg_.n_blocks < 0) throw Error(ErrorCode::invalid_config, name + ": n_blocks must be >= 0");
  std::vector<int> w{input_dim};
  w.insert(w.end(), cfg_.encoder_hidden.begin(), cfg_.encoder_hidden.end());
  w.push_back(2 * latent_dim);
  base_ = nn::Mlp(name + ".base", w, cfg_.activation, nn::Activation::identity, rng);
  const int context_dim = cfg_.conditional ? base_.feature_dim() : 0;
  std::vector<int> reversed(static_cast<std::size_t>(latent_dim));
  std::iota(reversed.rbegin(), reversed.rend(), 0);
  std::vector<int> identity(static_cast<std::size_t>(latent_dim));
  std::iota(identity.begin(), identity.end(), 0);
  for (int k = 0; k < cfg_.n_blocks; ++k) {
    blocks_.emplace_back(name + ".made" + std::to_string(k), latent_dim, context_dim, cfg_.made_hidden, rng,
                         cfg_.scale_clamp);
    permutations_.push_back(k == 0 ? identity : reversed);
  }
}

FlowStack::Conditioning FlowStack::condition(const Var& input) const {
  if (input.cols() != input_dim_) {
    throw Error(ErrorCode::dimension_mismatch, name_ + ": conditioning input has " + std::to_string(input.cols()) +
                                                   " columns, expected " + std::to_string(input_dim_));
  }
  const Var features = base_.features(input);
  Conditioning c{vae::DiagGaussian::from_encoder_output(base_.head(features)), Var()};
  if (cfg_.conditional) c.context = features;
  return c;
}

namespace {

bool is_identity(const std::vector<int>& p) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != static_cast<int>(i)) return false;
  }
  return true;
}

std::vector<int> inverse_perm(const std::vector<int>& p) {
  std::vector<int> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace

Var FlowStack::log_density(const Var& z, const Conditioning& c) const {
  if (z.cols() != latent_dim_) throw Error(ErrorCode::dimension_mismatch, name_ + ": latent has the wrong dimension");
  Var cur = z;
  Var total_log_det;
  for (std::size_t k = blocks_.size(); k-- > 0;) {
    const FlowResult r = blocks_[k].inverse(cur, c.context);
    total_log_det = total_log_det.defined() ? total_log_det + r.log_det : r.log_det;
    cur = r.out;
    if (!is_identity(permutations_[k])) cur = ad::permute_cols(cur, inverse_perm(permutations_[k]));
  }
  const Var base = vae::log_density(c.base, cur);
  return total_log_det.defined() ? base - total_log_det : base;
}

Var FlowStack::log_density(const Var& z, const Var& input) const { return log_density(z, condition(input)); }

FlowStack::Draw FlowStack::sample(const Var& input, const Matrix& eps) const {
  const Conditioning c = condition(input);
  Var cur = vae::reparameterize(c.base, eps);
  Var log_q = vae::log_density(c.base, cur);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (!is_identity(permutations_[k])) cur = ad::permute_cols(cur, permutations_[k]);
    const FlowResult r = blocks_[k].forward(cur, c.context);
    cur = r.out;
    log_q = log_q - r.log_det;
  }
  return {cur, log_q};
}

Matrix FlowStack::sample(const RowVector& input, int n, Rng& rng) const {
  if (n <= 0) return Matrix(0, latent_dim_);
  const Matrix rows = input.replicate(n, 1);
  return sample(ad::constant(rows), rng.normal_matrix(n, latent_dim_)).z.value();
}

std::vector<ad::Parameter*> FlowStack::parameters() {
  auto out = base_.parameters();
  for (auto& b : blocks_) {
    auto p = b.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const ad::Parameter*> FlowStack::parameters() const {
  auto out = base_.parameters();
  for (const auto& b : blocks_) {
    auto p = b.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void FlowStack::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  io::Manifest m;
  m.set("kind", "flow_stack");
  m.set("name", name_);
  m.set("input_dim", input_dim_);
  m.set("latent_dim", latent_dim_);
  m.set("n_blocks", cfg_.n_blocks);
  m.set("made_hidden", vae::format_ints(cfg_.made_hidden));
  m.set("conditional", cfg_.conditional ? 1 : 0);
  m.set("encoder_hidden", vae::format_ints(cfg_.encoder_hidden));
  m.set("activation", nn::to_string(cfg_.activation));
  m.set("scale_clamp", cfg_.scale_clamp);
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    const std::string p = "block." + std::to_string(k) + ".";
    m.set(p + "permutation", vae::format_ints(permutations_[k]));
    m.set(p + "input_degrees", vae::format_ints(blocks_[k].input_degrees()));
    for (std::size_t l = 0; l < blocks_[k].hidden_degrees().size(); ++l) {
      m.set(p + "hidden_degrees." + std::to_string(l), vae::format_ints(blocks_[k].hidden_degrees()[l]));
    }
    for (std::size_t l = 0; l < blocks_[k].masks().size(); ++l) {
      io::write_matrix(dir / ("mask_" + std::to_string(k) + "_" + std::to_string(l) + ".bin"), blocks_[k].masks()[l]);
    }
  }
  io::save_parameters(dir, parameters());
  m.save(dir / "manifest.txt");
}

FlowStack FlowStack::load(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("kind", "") != "flow_stack") throw Error(ErrorCode::io_error, dir.string() + ": not a flow stack");
  FlowConfig cfg;
  cfg.n_blocks = static_cast<int>(m.get_int("n_blocks"));
  cfg.made_hidden = vae::parse_ints(m.get("made_hidden"));
  cfg.conditional = m.get_int("conditional") != 0;
  cfg.encoder_hidden = vae::parse_ints(m.get("encoder_hidden"));
  cfg.activation = nn::parse_activation(m.get("activation"));
  cfg.scale_clamp = m.get_double("scale_clamp");
  Rng rng(0);
  FlowStack stack(m.get("name"), static_cast<int>(m.get_int("input_dim")), static_cast<int>(m.get_int("latent_dim")),
                  cfg, rng);
  for (std::size_t k = 0; k < stack.blocks_.size(); ++k) {
    const std::string p = "block." + std::to_string(k) + ".";
    const auto perm = vae::parse_ints(m.get(p + "permutation"));
    if (perm != stack.permutations_[k] || vae::parse_ints(m.get(p + "input_degrees")) != stack.blocks_[k].input_degrees()) {
      throw Error(ErrorCode::io_error, dir.string() + ": stored permutation or degrees differ from this build");
    }
    for (std::size_t l = 0; l < stack.blocks_[k].masks().size(); ++l) {
      const Matrix& mask = stack.blocks_[k].masks()[l];
      const Matrix stored =
          io::read_matrix(dir / ("mask_" + std::to_string(k) + "_" + std::to_string(l) + ".bin"), mask.rows(), mask.cols());
      if (stored != mask) throw Error(ErrorCode::io_error, dir.string() + ": stored MADE mask differs");
    }
  }
  io::load_parameters(dir, stack.parameters());
  return stack;
}

}  // namespace jnflow::flow
