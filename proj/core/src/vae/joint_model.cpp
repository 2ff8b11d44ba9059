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

#include "jnf/vae/joint_model.hpp"

#include <sstream>

#include "jnf/error.hpp"

namespace jnflow::vae {

namespace {

std::vector<int> widths(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> w{in};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(out);
  return w;
}

}  // namespace

JointModel::JointModel(std::vector<data::ModalitySpec> specs, JointModelConfig cfg, Rng& rng)
    : specs_(std::move(specs)), cfg_(std::move(cfg)) {
  if (specs_.empty()) throw Error(ErrorCode::invalid_config, "joint model needs at least one modality");
  if (cfg_.latent_dim < 1) throw Error(ErrorCode::invalid_config, "latent_dim must be >= 1");
  if (cfg_.reconstruction_weights.empty()) cfg_.reconstruction_weights.assign(specs_.size(), 1.0);
  if (cfg_.reconstruction_weights.size() != specs_.size()) {
    throw Error(ErrorCode::invalid_config, "one reconstruction weight per modality is required");
  }
  for (double w : cfg_.reconstruction_weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::invalid_config, "reconstruction weights must be positive");
  }
  int in = 0;
  for (const auto& s : specs_) {
    s.validate();
    in += s.dim();
  }
  encoder_ = nn::Mlp("joint.encoder", widths(in, cfg_.encoder_hidden, 2 * cfg_.latent_dim), cfg_.activation,
                     nn::Activation::identity, rng);
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    decoders_.emplace_back("joint.decoder" + std::to_string(i),
                           widths(cfg_.latent_dim, cfg_.decoder_hidden, specs_[i].dim()), cfg_.activation,
                           nn::Activation::identity, rng);
  }
}

DiagGaussian JointModel::encode(const std::vector<Matrix>& xs) const {
  if (xs.size() != specs_.size()) {
    throw Error(ErrorCode::shape_mismatch, "joint encoder expects " + std::to_string(specs_.size()) + " modalities");
  }
  std::vector<Var> parts;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].cols() != specs_[i].dim() || xs[i].rows() != xs[0].rows()) {
      throw Error(ErrorCode::shape_mismatch, "modality '" + specs_[i].name + "' batch has the wrong shape");
    }
    parts.push_back(ad::constant(xs[i]));
  }
  return DiagGaussian::from_encoder_output(encoder_(ad::hcat(parts)));
}

Var JointModel::decode(std::size_t modality, const Var& z) const { return decoders_.at(modality)(z); }

std::vector<ad::Parameter*> JointModel::parameters() {
  auto out = encoder_.parameters();
  for (auto& d : decoders_) {
    auto p = d.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const ad::Parameter*> JointModel::parameters() const {
  auto out = encoder_.parameters();
  for (const auto& d : decoders_) {
    auto p = d.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::string format_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoi(tok));
  }
  return out;
}

std::string format_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + io::format_double(v[i]);
  return s;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

void write_specs(io::Manifest& m, const std::string& prefix, const std::vector<data::ModalitySpec>& specs) {
  m.set(prefix + "count", specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const std::string p = prefix + std::to_string(i) + ".";
    m.set(p + "name", specs[i].name);
    m.set(p + "shape", data::format_shape(specs[i].shape));
    m.set(p + "likelihood", data::to_string(specs[i].likelihood));
  }
}

std::vector<data::ModalitySpec> read_specs(const io::Manifest& m, const std::string& prefix) {
  std::vector<data::ModalitySpec> specs;
  const auto n = m.get_int(prefix + "count");
  for (long long i = 0; i < n; ++i) {
    const std::string p = prefix + std::to_string(i) + ".";
    specs.push_back({m.get(p + "name"), data::parse_shape(m.get(p + "shape")),
                     data::parse_likelihood_family(m.get(p + "likelihood"))});
  }
  return specs;
}

void JointModel::save(const std::filesystem::path& dir, const io::Manifest& extra) const {
  std::filesystem::create_directories(dir);
  io::Manifest m = extra;
  m.set("kind", "joint_model");
  m.set("latent_dim", cfg_.latent_dim);
  m.set("encoder_hidden", format_ints(cfg_.encoder_hidden));
  m.set("decoder_hidden", format_ints(cfg_.decoder_hidden));
  m.set("activation", nn::to_string(cfg_.activation));
  m.set("reconstruction_weights", format_doubles(cfg_.reconstruction_weights));
  write_specs(m, "modality.", specs_);
  io::save_parameters(dir, parameters());
  m.save(dir / "manifest.txt");
}

JointModel JointModel::load(const std::filesystem::path& dir) {
  const auto m = io::Manifest::load(dir / "manifest.txt");
  if (m.get_or("kind", "") != "joint_model") throw Error(ErrorCode::io_error, dir.string() + ": not a joint model");
  JointModelConfig cfg;
  cfg.latent_dim = static_cast<int>(m.get_int("latent_dim"));
  cfg.encoder_hidden = parse_ints(m.get("encoder_hidden"));
  cfg.decoder_hidden = parse_ints(m.get("decoder_hidden"));
  cfg.activation = nn::parse_activation(m.get("activation"));
  cfg.reconstruction_weights = parse_doubles(m.get("reconstruction_weights"));
  Rng rng(0);
  JointModel model(read_specs(m, "modality."), cfg, rng);
  io::load_parameters(dir, model.parameters());
  return model;
}

}  // namespace jnflow::vae
