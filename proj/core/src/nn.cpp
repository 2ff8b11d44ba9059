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

#include "jnf/nn.hpp"

#include <cmath>

#include "jnf/error.hpp"

namespace jnflow::nn {

Var activate(const Var& x, Activation act) {
  switch (act) {
    case Activation::identity: return x;
    case Activation::relu: return ad::relu(x);
    case Activation::sigmoid: return ad::sigmoid(x);
    case Activation::tanh: return ad::tanh(x);
  }
  return x;
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw Error(ErrorCode::invalid_config, "unknown activation '" + name + "'");
}

const char* to_string(Activation act) {
  switch (act) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Linear::Linear(const std::string& name, int in, int out, Rng& rng) {
  if (in < 1 || out < 1) throw Error(ErrorCode::invalid_argument, name + ": layer widths must be positive");
  // Uniform(-1/sqrt(in), 1/sqrt(in)) for both weight and bias.
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight_ = Parameter(name + ".weight", rng.uniform_matrix(in, out, -bound, bound));
  bias_ = Parameter(name + ".bias", rng.uniform_matrix(1, out, -bound, bound));
}

Var Linear::operator()(const Var& x) const {
  return ad::add_row(ad::matmul(x, ad::param(weight_)), ad::param(bias_));
}

Mlp::Mlp(const std::string& name, std::vector<int> widths, Activation hidden, Activation output, Rng& rng)
    : widths_(std::move(widths)), hidden_(hidden), output_(output) {
  if (widths_.size() < 2) throw Error(ErrorCode::invalid_argument, name + ": an MLP needs at least in and out widths");
  layers_.reserve(widths_.size() - 1);
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), widths_[i], widths_[i + 1], rng);
  }
}

Var Mlp::features(const Var& x) const {
  Var h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) h = activate(layers_[i](h), hidden_);
  return h;
}

Var Mlp::head(const Var& features) const { return activate(layers_.back()(features), output_); }

Var Mlp::operator()(const Var& x) const { return head(features(x)); }

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight());
    out.push_back(&l.bias());
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight());
    out.push_back(&l.bias());
  }
  return out;
}

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::zero_grad() { nn::zero_grad(params_); }

void Adam::step() {
  ++t_;
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto* p : params_) sq += p->grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    const Matrix g = p.grad * scale;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    p.value.array() -= cfg_.learning_rate * (m_[i].array() / bc1) /
                       ((v_[i].array() / bc2).sqrt() + cfg_.epsilon);
  }
}

void zero_grad(const std::vector<Parameter*>& params) {
  for (auto* p : params) p->zero_grad();
}

bool all_finite(const std::vector<Parameter*>& params) {
  for (const auto* p : params) {
    if (!p->value.allFinite()) return false;
  }
  return true;
}

std::uint64_t hash_parameters(const std::vector<const Parameter*>& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto* p : params) {
    feed(p->name.data(), p->name.size());
    feed(p->value.data(), static_cast<std::size_t>(p->value.size()) * sizeof(double));
  }
  return h;
}

}  // namespace jnflow::nn
