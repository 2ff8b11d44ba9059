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

#include "jnf/autodiff.hpp"

#include <cmath>
#include <unordered_set>
#include <utility>

#include "jnf/error.hpp"

namespace jnflow {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::label_mismatch: return "label-mismatch";
    case ErrorCode::empty_class: return "empty-class";
    case ErrorCode::training_diverged: return "training-diverged";
    case ErrorCode::not_positive_definite: return "not-positive-definite";
    case ErrorCode::batch_too_small: return "batch-too-small";
    case ErrorCode::conditioning_mode_mismatch: return "conditioning-mode-mismatch";
    case ErrorCode::degenerate_chains: return "degenerate-chains";
    case ErrorCode::non_finite_gradient: return "non-finite-gradient";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::stage_failure: return "stage-failure";
    case ErrorCode::accuracy_below_floor: return "accuracy-below-floor";
  }
  return "unknown";
}

}  // namespace jnflow

namespace jnflow::ad {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

namespace {

Var make(Matrix value, std::initializer_list<Var> parents, std::function<void(Node&)> rule) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->parents.reserve(parents.size());
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(rule);
  }
  return Var(std::move(node));
}

template <class Expr>
void accumulate(Node& target, const Expr& g) {
  if (!target.requires_grad) return;
  if (target.grad.size() == 0) {
    target.grad = g;
  } else {
    target.grad += g;
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::dimension_mismatch,
                std::string(op) + ": " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                    " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

}  // namespace

double Var::scalar() const {
  if (rows() != 1 || cols() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "scalar() on a non 1x1 value");
  }
  return node_->value(0, 0);
}

Matrix Var::grad() const {
  if (!node_ || node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

Var constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var variable(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

namespace {
thread_local bool g_params_frozen = false;
}  // namespace

FrozenParameters::FrozenParameters() : previous_(g_params_frozen) { g_params_frozen = true; }
FrozenParameters::~FrozenParameters() { g_params_frozen = previous_; }

Var param(Parameter& p) {
  if (g_params_frozen) return constant(p.value);
  auto node = std::make_shared<Node>();
  node->value = p.value;
  node->requires_grad = true;
  node->param = &p;
  return Var(std::move(node));
}

Var detach(const Var& v) { return constant(v.value()); }

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "backward() needs a 1x1 root");
  }
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.resize(0, 0);
  root.node()->grad = Matrix::Ones(1, 1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->grad.size() == 0) continue;
    if (n->backward) n->backward(*n);
    if (n->param != nullptr) n->param->grad += n->grad;
  }
}

Var custom(Matrix value, std::vector<Var> parents,
           std::function<std::vector<Matrix>(const Matrix&)> rule) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const auto& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const auto& p : parents) node->parents.push_back(p.node());
    node->backward = [rule = std::move(rule)](Node& self) {
      std::vector<Matrix> grads = rule(self.grad);
      for (std::size_t i = 0; i < grads.size() && i < self.parents.size(); ++i) {
        if (grads[i].size() == 0) continue;
        accumulate(*self.parents[i], grads[i]);
      }
    };
  }
  return Var(std::move(node));
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::dimension_mismatch,
                "matmul: inner dimensions " + std::to_string(a.cols()) + " and " + std::to_string(b.rows()));
  }
  Matrix value(a.rows(), b.cols());
  value.noalias() = a.value() * b.value();
  return make(std::move(value), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      Matrix g(pa.value.rows(), pa.value.cols());
      g.noalias() = self.grad * pb.value.transpose();
      accumulate(pa, g);
    }
    if (pb.requires_grad) {
      Matrix g(pb.value.rows(), pb.value.cols());
      g.noalias() = pa.value.transpose() * self.grad;
      accumulate(pb, g);
    }
  });
}

Var transpose(const Var& a) {
  return make(a.value().transpose(), {a},
              [](Node& self) { accumulate(parent(self, 0), self.grad.transpose()); });
}

Var operator+(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return make(a.value() + b.value(), {a, b}, [](Node& self) {
    accumulate(parent(self, 0), self.grad);
    accumulate(parent(self, 1), self.grad);
  });
}

Var operator-(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return make(a.value() - b.value(), {a, b}, [](Node& self) {
    accumulate(parent(self, 0), self.grad);
    accumulate(parent(self, 1), -self.grad);
  });
}

Var operator*(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  return make(a.value().cwiseProduct(b.value()), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) accumulate(pa, self.grad.cwiseProduct(pb.value));
    if (pb.requires_grad) accumulate(pb, self.grad.cwiseProduct(pa.value));
  });
}

Var operator-(const Var& a) {
  return make(-a.value(), {a}, [](Node& self) { accumulate(parent(self, 0), -self.grad); });
}

Var operator*(const Var& a, double s) {
  return make(a.value() * s, {a}, [s](Node& self) { accumulate(parent(self, 0), self.grad * s); });
}

Var operator*(double s, const Var& a) { return a * s; }

Var operator+(const Var& a, double s) {
  return make((a.value().array() + s).matrix(), {a},
              [](Node& self) { accumulate(parent(self, 0), self.grad); });
}

Var operator-(const Var& a, double s) { return a + (-s); }

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "add_row: broadcast shape");
  }
  Matrix value = a.value().rowwise() + row.value().row(0);
  return make(std::move(value), {a, row}, [](Node& self) {
    accumulate(parent(self, 0), self.grad);
    if (parent(self, 1).requires_grad) accumulate(parent(self, 1), self.grad.colwise().sum());
  });
}

Var sub_row(const Var& a, const Var& row) { return add_row(a, -row); }

Var mul_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "mul_row: broadcast shape");
  }
  Matrix value = (a.value().array().rowwise() * row.value().row(0).array()).matrix();
  return make(std::move(value), {a, row}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pr = parent(self, 1);
    if (pa.requires_grad) {
      accumulate(pa, (self.grad.array().rowwise() * pr.value.row(0).array()).matrix());
    }
    if (pr.requires_grad) {
      accumulate(pr, self.grad.cwiseProduct(pa.value).colwise().sum());
    }
  });
}

Var add_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "add_col: broadcast shape");
  }
  Matrix value = a.value().colwise() + col.value().col(0);
  return make(std::move(value), {a, col}, [](Node& self) {
    accumulate(parent(self, 0), self.grad);
    if (parent(self, 1).requires_grad) accumulate(parent(self, 1), self.grad.rowwise().sum());
  });
}

Var mul_col(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) {
    throw Error(ErrorCode::dimension_mismatch, "mul_col: broadcast shape");
  }
  Matrix value = (a.value().array().colwise() * col.value().col(0).array()).matrix();
  return make(std::move(value), {a, col}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pc = parent(self, 1);
    if (pa.requires_grad) {
      accumulate(pa, (self.grad.array().colwise() * pc.value.col(0).array()).matrix());
    }
    if (pc.requires_grad) {
      accumulate(pc, self.grad.cwiseProduct(pa.value).rowwise().sum());
    }
  });
}

Var mul_scalar(const Var& a, const Var& s) {
  if (s.rows() != 1 || s.cols() != 1) {
    throw Error(ErrorCode::dimension_mismatch, "mul_scalar: expects a 1x1 factor");
  }
  return make(a.value() * s.value()(0, 0), {a, s}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& ps = parent(self, 1);
    if (pa.requires_grad) accumulate(pa, self.grad * ps.value(0, 0));
    if (ps.requires_grad) {
      accumulate(ps, Matrix::Constant(1, 1, self.grad.cwiseProduct(pa.value).sum()));
    }
  });
}

Var exp(const Var& a) {
  return make(a.value().array().exp().matrix(), {a}, [](Node& self) {
    accumulate(parent(self, 0), self.grad.cwiseProduct(self.value));
  });
}

Var log(const Var& a) {
  return make(a.value().array().log().matrix(), {a}, [](Node& self) {
    accumulate(parent(self, 0), (self.grad.array() / parent(self, 0).value.array()).matrix());
  });
}

Var square(const Var& a) {
  return make(a.value().array().square().matrix(), {a}, [](Node& self) {
    accumulate(parent(self, 0), (2.0 * self.grad.array() * parent(self, 0).value.array()).matrix());
  });
}

Var relu(const Var& a) {
  return make(a.value().cwiseMax(0.0), {a}, [](Node& self) {
    const auto mask = (parent(self, 0).value.array() > 0.0).cast<double>();
    accumulate(parent(self, 0), (self.grad.array() * mask).matrix());
  });
}

namespace {

Eigen::ArrayXXd stable_sigmoid(const Eigen::ArrayXXd& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Eigen::ArrayXXd stable_softplus(const Eigen::ArrayXXd& x) {
  return x.unaryExpr([](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
}

}  // namespace

Var sigmoid(const Var& a) {
  return make(stable_sigmoid(a.value().array()).matrix(), {a}, [](Node& self) {
    const auto s = self.value.array();
    accumulate(parent(self, 0), (self.grad.array() * s * (1.0 - s)).matrix());
  });
}

Var tanh(const Var& a) {
  return make(a.value().array().tanh().matrix(), {a}, [](Node& self) {
    const auto t = self.value.array();
    accumulate(parent(self, 0), (self.grad.array() * (1.0 - t.square())).matrix());
  });
}

Var softplus(const Var& a) {
  return make(stable_softplus(a.value().array()).matrix(), {a}, [](Node& self) {
    accumulate(parent(self, 0),
               (self.grad.array() * stable_sigmoid(parent(self, 0).value.array())).matrix());
  });
}

Var log_sigmoid(const Var& a) {
  return make((-stable_softplus(-a.value().array())).matrix(), {a}, [](Node& self) {
    accumulate(parent(self, 0),
               (self.grad.array() * stable_sigmoid(-parent(self, 0).value.array())).matrix());
  });
}

Var clamp(const Var& a, double lo, double hi) {
  return make(a.value().cwiseMax(lo).cwiseMin(hi), {a}, [lo, hi](Node& self) {
    const auto& x = parent(self, 0).value.array();
    const auto mask = ((x >= lo) && (x <= hi)).cast<double>();
    accumulate(parent(self, 0), (self.grad.array() * mask).matrix());
  });
}

Var sum(const Var& a) {
  return make(Matrix::Constant(1, 1, a.value().sum()), {a}, [](Node& self) {
    const Node& p = parent(self, 0);
    accumulate(parent(self, 0), Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return make(Matrix::Constant(1, 1, a.value().mean()), {a}, [n](Node& self) {
    const Node& p = parent(self, 0);
    accumulate(parent(self, 0), Matrix::Constant(p.value.rows(), p.value.cols(), self.grad(0, 0) / n));
  });
}

Var row_sum(const Var& a) {
  return make(a.value().rowwise().sum(), {a}, [](Node& self) {
    const Eigen::Index c = parent(self, 0).value.cols();
    accumulate(parent(self, 0), self.grad.col(0).replicate(1, c));
  });
}

Var col_mean(const Var& a) {
  return make(a.value().colwise().mean(), {a}, [](Node& self) {
    const Eigen::Index n = parent(self, 0).value.rows();
    accumulate(parent(self, 0), (self.grad.row(0) / static_cast<double>(n)).replicate(n, 1));
  });
}

Var log_sum_exp_rows(const Var& a) {
  const Matrix& x = a.value();
  const Vector m = x.rowwise().maxCoeff();
  const Vector s = (x.colwise() - m).array().exp().rowwise().sum();
  Matrix value = (m.array() + s.array().log()).matrix();
  return make(std::move(value), {a}, [](Node& self) {
    const Matrix& xv = parent(self, 0).value;
    const Matrix softmax = (xv.colwise() - self.value.col(0)).array().exp().matrix();
    accumulate(parent(self, 0), (softmax.array().colwise() * self.grad.col(0).array()).matrix());
  });
}

Var log_softmax(const Var& a) {
  const Matrix& x = a.value();
  const Vector m = x.rowwise().maxCoeff();
  const Vector lse = m.array() + (x.colwise() - m).array().exp().rowwise().sum().log();
  Matrix value = x.colwise() - lse;
  return make(std::move(value), {a}, [](Node& self) {
    const Matrix softmax = self.value.array().exp().matrix();
    const Vector gsum = self.grad.rowwise().sum();
    accumulate(parent(self, 0), self.grad - (softmax.array().colwise() * gsum.array()).matrix());
  });
}

Var cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "cols: range outside matrix");
  }
  return make(a.value().middleCols(start, count), {a}, [start, count](Node& self) {
    Node& p = parent(self, 0);
    Matrix g = Matrix::Zero(p.value.rows(), p.value.cols());
    g.middleCols(start, count) = self.grad;
    accumulate(p, g);
  });
}

Var hcat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::invalid_argument, "hcat: no inputs");
  const Eigen::Index n = parts.front().rows();
  Eigen::Index total = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) throw Error(ErrorCode::dimension_mismatch, "hcat: row counts differ");
    total += p.cols();
  }
  Matrix value(n, total);
  Eigen::Index offset = 0;
  bool any_grad = false;
  for (const auto& p : parts) {
    value.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
    any_grad = any_grad || p.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (any_grad) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.node());
    node->backward = [](Node& self) {
      Eigen::Index off = 0;
      for (auto& p : self.parents) {
        const Eigen::Index c = p->value.cols();
        accumulate(*p, self.grad.middleCols(off, c));
        off += c;
      }
    };
  }
  return Var(std::move(node));
}

Var permute_cols(const Var& a, std::span<const int> perm) {
  if (static_cast<Eigen::Index>(perm.size()) != a.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "permute_cols: permutation size");
  }
  Matrix value(a.rows(), a.cols());
  for (std::size_t k = 0; k < perm.size(); ++k) value.col(static_cast<Eigen::Index>(k)) = a.value().col(perm[k]);
  std::vector<int> p(perm.begin(), perm.end());
  return make(std::move(value), {a}, [p = std::move(p)](Node& self) {
    Matrix g(self.grad.rows(), self.grad.cols());
    for (std::size_t k = 0; k < p.size(); ++k) g.col(p[k]) = self.grad.col(static_cast<Eigen::Index>(k));
    accumulate(parent(self, 0), g);
  });
}

Var repeat_rows(const Var& a, Eigen::Index times) {
  if (a.rows() != 1) throw Error(ErrorCode::dimension_mismatch, "repeat_rows: expects one row");
  return make(a.value().replicate(times, 1), {a},
              [](Node& self) { accumulate(parent(self, 0), self.grad.colwise().sum()); });
}

}  // namespace jnflow::ad
