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

#include "jnf/flow/made.hpp"

#include <cmath>

#include "jnf/error.hpp"

namespace jnflow::flow {

MadeBlock::MadeBlock(const std::string& name, int dim, int context_dim, std::vector<int> hidden, Rng& rng,
                     double scale_clamp)
    : dim_(dim), context_dim_(context_dim), hidden_(std::move(hidden)), scale_clamp_(scale_clamp) {
  if (dim < 1) throw Error(ErrorCode::invalid_config, name + ": flow dimension must be >= 1");
  if (context_dim < 0) throw Error(ErrorCode::invalid_config, name + ": context_dim must be >= 0");
  if (!(scale_clamp > 0.0)) throw Error(ErrorCode::invalid_config, name + ": scale_clamp must be positive");
  for (int h : hidden_) {
    if (h < 1) throw Error(ErrorCode::invalid_config, name + ": hidden widths must be positive");
  }

  for (int j = 0; j < dim; ++j) input_degrees_.push_back(j + 1);
  for (int h : hidden_) {
    std::vector<int> deg(static_cast<std::size_t>(h));
    for (int k = 0; k < h; ++k) deg[static_cast<std::size_t>(k)] = k % dim;
    hidden_degrees_.push_back(std::move(deg));
  }

  // Mask (in x out): hidden unit k sees inputs of degree <= deg(k); output j
  // sees units of degree < j + 1.
  std::vector<int> prev = input_degrees_;
  for (std::size_t l = 0; l < hidden_.size(); ++l) {
    const auto& cur = hidden_degrees_[l];
    Matrix m(static_cast<Eigen::Index>(prev.size()), static_cast<Eigen::Index>(cur.size()));
    for (std::size_t a = 0; a < prev.size(); ++a)
      for (std::size_t b = 0; b < cur.size(); ++b) m(a, b) = cur[b] >= prev[a] ? 1.0 : 0.0;
    masks_.push_back(std::move(m));
    prev = cur;
  }
  Matrix out(static_cast<Eigen::Index>(prev.size()), 2 * dim);
  for (std::size_t a = 0; a < prev.size(); ++a) {
    for (int j = 0; j < dim; ++j) {
      out(a, j) = prev[a] < j + 1 ? 1.0 : 0.0;
      out(a, dim + j) = out(a, j);
    }
  }
  masks_.push_back(std::move(out));

  std::vector<int> widths{dim};
  widths.insert(widths.end(), hidden_.begin(), hidden_.end());
  widths.push_back(2 * dim);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[l] + (l == 0 ? context_dim : 0)));
    const std::string p = name + ".l" + std::to_string(l);
    if (last) {
      weights_.emplace_back(p + ".weight", Matrix::Zero(widths[l], widths[l + 1]));
      biases_.emplace_back(p + ".bias", Matrix::Zero(1, widths[l + 1]));
    } else {
      weights_.emplace_back(p + ".weight", rng.uniform_matrix(widths[l], widths[l + 1], -bound, bound));
      biases_.emplace_back(p + ".bias", rng.uniform_matrix(1, widths[l + 1], -bound, bound));
    }
  }
  const int first_out = widths[1];
  const double cbound = 1.0 / std::sqrt(static_cast<double>(dim + context_dim));
  context_weight_ = ad::Parameter(name + ".context",
                                  !hidden_.empty() ? rng.uniform_matrix(context_dim, first_out, -cbound, cbound)
                                      : Matrix::Zero(context_dim, first_out));
}

std::pair<Var, Var> MadeBlock::shift_scale(const Var& v, const Var& context) const {
  if (v.cols() != dim_) throw Error(ErrorCode::dimension_mismatch, "MADE input has the wrong dimension");
  Var h = v;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Var pre = ad::matmul(h, ad::param(weights_[l]) * ad::constant(masks_[l]));
    if (l == 0 && context_dim_ > 0) {
      if (!context.defined() || context.cols() != context_dim_ || context.rows() != v.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "MADE context has the wrong shape");
      }
      pre = pre + ad::matmul(context, ad::param(context_weight_));
    }
    pre = ad::add_row(pre, ad::param(biases_[l]));
    h = l + 1 < weights_.size() ? ad::tanh(pre) : pre;
  }
  const Var s = ad::tanh(ad::cols(h, 0, dim_) * (1.0 / scale_clamp_)) * scale_clamp_;
  const Var t = ad::cols(h, dim_, dim_);
  return {s, t};
}

FlowResult MadeBlock::inverse(const Var& v, const Var& context) const {
  const auto [s, t] = shift_scale(v, context);
  return {(v - t) * ad::exp(-s), ad::row_sum(s)};
}

FlowResult MadeBlock::forward(const Var& u, const Var& context) const {
  // After pass k every coordinate of degree <= k is final.
  Var v = ad::constant(Matrix::Zero(u.rows(), u.cols()));
  Var s;
  for (int pass = 0; pass < dim_; ++pass) {
    auto st = shift_scale(v, context);
    s = st.first;
    v = u * ad::exp(st.first) + st.second;
  }
  return {v, ad::row_sum(s)};
}

std::vector<ad::Parameter*> MadeBlock::parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  if (context_dim_ > 0) out.push_back(&context_weight_);
  return out;
}

std::vector<const ad::Parameter*> MadeBlock::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  if (context_dim_ > 0) out.push_back(&context_weight_);
  return out;
}

}  // namespace jnflow::flow
