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

#ifndef JNF_AUTODIFF_HPP_
#define JNF_AUTODIFF_HPP_

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace jnflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace jnflow

// Reverse-mode automatic differentiation over dense matrices.
//
// Every value is a matrix whose rows index the batch.  A graph is built
// eagerly while evaluating an expression; backward() walks it once in reverse
// topological order.  Graphs are per-expression and cheap: nodes whose inputs
// do not require gradients carry no closure and no parents.
namespace jnflow::ad {

/// A trainable tensor.  The gradient accumulates across backward() calls
/// until zero_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
};

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  Parameter* param = nullptr;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

}  // namespace detail

class Var {
 public:
  Var() = default;

  const Matrix& value() const { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return static_cast<bool>(node_); }

  /// Gradient of the last backward() root with respect to this value.
  /// Zero-filled if no gradient reached it.
  Matrix grad() const;

  // Internal; used by op implementations.
  explicit Var(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

Var constant(Matrix value);
Var constant(double value);
/// Leaf that records its own gradient (used for input gradients, e.g. in HMC).
Var variable(Matrix value);
/// Leaf bound to a parameter; backward() accumulates into p.grad.
Var param(Parameter& p);
/// While alive, param() yields constants on this thread: used for
/// inference-only graphs (e.g. HMC gradients with respect to z).
class FrozenParameters {
 public:
  FrozenParameters();
  ~FrozenParameters();
  FrozenParameters(const FrozenParameters&) = delete;
  FrozenParameters& operator=(const FrozenParameters&) = delete;

 private:
  bool previous_;
};

/// Same value, no gradient path.
Var detach(const Var& v);

/// Back-propagates from a 1x1 root.
void backward(const Var& root);

/// Builds a node with an arbitrary backward rule.  `rule` receives the output
/// gradient and must return one gradient per parent (empty matrices are
/// skipped).
Var custom(Matrix value, std::vector<Var> parents,
           std::function<std::vector<Matrix>(const Matrix& grad_out)> rule);

// Linear algebra.
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

// Elementwise (same shape).
Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(const Var& a, double s);
Var operator*(double s, const Var& a);
Var operator+(const Var& a, double s);
Var operator-(const Var& a, double s);

// Broadcasting: `row` is 1xC, `col` is Nx1, `s` is 1x1.
Var add_row(const Var& a, const Var& row);
Var sub_row(const Var& a, const Var& row);
Var mul_row(const Var& a, const Var& row);
Var add_col(const Var& a, const Var& col);
Var mul_col(const Var& a, const Var& col);
Var mul_scalar(const Var& a, const Var& s);

// Pointwise nonlinearities.
Var exp(const Var& a);
Var log(const Var& a);
Var square(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var softplus(const Var& a);
Var log_sigmoid(const Var& a);
/// Hard clamp; zero gradient outside [lo, hi].
Var clamp(const Var& a, double lo, double hi);

// Reductions.
Var sum(const Var& a);                 // -> 1x1
Var mean(const Var& a);                // -> 1x1
Var row_sum(const Var& a);             // NxC -> Nx1
Var col_mean(const Var& a);            // NxC -> 1xC
Var log_sum_exp_rows(const Var& a);    // NxC -> Nx1
Var log_softmax(const Var& a);         // row-wise

// Shape manipulation.
Var cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var hcat(std::span<const Var> parts);
Var permute_cols(const Var& a, std::span<const int> perm);  // out[:, k] = a[:, perm[k]]
Var repeat_rows(const Var& a, Eigen::Index times);          // 1xC -> times x C

}  // namespace jnflow::ad

#endif  // JNF_AUTODIFF_HPP_
