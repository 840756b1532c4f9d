//
// Copyright 2026 The tpsearch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Minimal reverse-mode automatic differentiation over dense row-major
// matrices. A Graph owns every node created while building an expression;
// nodes are appended in evaluation order, so backward() is a single reverse
// sweep. Only the operations the encoders and losses need are provided.

#ifndef TPSEARCH_AUTOGRAD_H_
#define TPSEARCH_AUTOGRAD_H_

#include <Eigen/Dense>

#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace tpsearch::ag {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

// A named trainable tensor. The training loop owns Parameters; graphs only
// read them and report gradients back through Graph::param_grad().
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool frozen = false;
  // Decoupled weight decay applies only when true.
  bool decay = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool apply_decay = true)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Matrix::Zero(value.rows(), value.cols())),
        decay(apply_decay) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Graph;

// Lightweight handle to a node inside a Graph.
class Var {
 public:
  Var() = default;

  bool valid() const { return graph_ != nullptr; }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }

  const Matrix& value() const;
  // Gradient accumulated by the last backward sweep (zeros if none reached
  // this node).
  Matrix grad() const;
  bool requires_grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  // Convenience for 1x1 results.
  double item() const;

 private:
  friend class Graph;
  Var(Graph* g, int id) : graph_(g), id_(id) {}
  Graph* graph_ = nullptr;
  int id_ = -1;
};

class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, const Matrix& out_grad)>;

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Matrix value);
  // A free leaf that receives gradient (used for features in loss checks).
  Var leaf(Matrix value);
  // Binds a parameter. Repeated calls with the same parameter return the
  // same node. Frozen parameters bind as constants.
  Var param(const Parameter& p);

  // Records a new node. `backward` is dropped when no input needs gradient.
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  // Reverse sweep from a 1x1 output seeded with 1.
  void backward(Var output);
  void backward(Var output, const Matrix& seed);

  // Accumulates `g` into the gradient of `v` (no-op if v needs no gradient).
  void add_grad(Var v, const Matrix& g);

  // Gradient reaching a bound parameter, or nullptr if it was never bound or
  // received nothing.
  const Matrix* param_grad(const Parameter& p) const;

  const Matrix& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  Matrix grad(int id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  Var push(Matrix value, bool requires_grad, BackwardFn backward);

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> bound_;
};

// ---- Linear algebra ------------------------------------------------------

Var matmul(Var a, Var b);                 // a * b
Var matmul_nt(Var a, Var b);              // a * b^T
// x * w^T + bias (bias is a 1 x out row, may be an invalid Var).
Var linear(Var x, Var w, Var bias = {});
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row(Var a, Var row);              // broadcasts a 1 x n row
Var scale(Var a, double c);

// ---- Shape ---------------------------------------------------------------

Var slice_rows(Var x, Index start, Index count);
Var gather_rows(Var x, std::span<const int> rows);
Var vstack(std::span<const Var> parts);
Var hcat(Var a, Var b);
Var detach(Var x);

// ---- Elementwise / reductions -------------------------------------------

Var relu(Var x);
// x * sigmoid(1.702 x)
Var quick_gelu(Var x);
Var sum(Var x);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var l2_normalize_rows(Var x);
Var rowwise_dot(Var a, Var b);

// Multi-head scaled dot-product self-attention over a packed [q | k | v]
// projection of shape n x 3d.
Var attention(Var qkv, int heads, bool causal);

// Generalized mean over rows: ((1/n) sum_i max(x_i, eps)^q)^(1/q) per column.
// `q` is a 1x1 node so it can be learned.
Var gem_pool(Var x, Var q, double eps);

// sum_i -log softmax(logits_i)[labels_i]
Var cross_entropy_sum(Var logits, std::span<const int> labels);

// sum_ij w_ij * log(1 + exp(slope * (s_ij - shift)))
Var softplus_sum(Var s, const Matrix& weights, double slope, double shift);

// Per-row min (or max) of s restricted to mask != 0. Rows with an empty mask
// are skipped; the result is k x 1 where k counts non-empty rows.
Var masked_row_extreme(Var s, const Matrix& mask, bool take_max);

}  // namespace tpsearch::ag

#endif  // TPSEARCH_AUTOGRAD_H_
