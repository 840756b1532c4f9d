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

#include "tpsearch/autograd.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tpsearch::ag {
namespace {

void require_same_graph(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.graph() != b.graph()) {
    throw std::invalid_argument("autograd: operands belong to different graphs");
  }
}

void require_shape(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("autograd: ") + what);
}

double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

// ---- Var -----------------------------------------------------------------

const Matrix& Var::value() const { return graph_->value(id_); }
Matrix Var::grad() const { return graph_->grad(id_); }
bool Var::requires_grad() const { return graph_->requires_grad(id_); }

double Var::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::logic_error("Var::item on non-scalar");
  return v(0, 0);
}

// ---- Graph ---------------------------------------------------------------

Var Graph::push(Matrix value, bool requires_grad, BackwardFn backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Graph::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Graph::leaf(Matrix value) {
  return push(std::move(value), grad_enabled_, {});
}

Var Graph::param(const Parameter& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  Var v = push(p.value, grad_enabled_ && !p.frozen, {});
  bound_.emplace(&p, v.id());
  return v;
}

Var Graph::record(Matrix value, std::span<const Var> inputs,
                  BackwardFn backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (!in.valid()) continue;
      if (in.graph() != this) {
        throw std::invalid_argument("autograd: input from a foreign graph");
      }
      needs = needs || nodes_[in.id()].requires_grad;
    }
  }
  return push(std::move(value), needs, needs ? std::move(backward) : BackwardFn{});
}

void Graph::add_grad(Var v, const Matrix& g) {
  Node& n = nodes_[v.id()];
  if (!n.requires_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Matrix Graph::grad(int id) const {
  const Node& n = nodes_[id];
  if (n.has_grad) return n.grad;
  return Matrix::Zero(n.value.rows(), n.value.cols());
}

void Graph::backward(Var output) {
  if (output.value().size() != 1) {
    throw std::invalid_argument("backward: output must be 1x1 without a seed");
  }
  backward(output, Matrix::Ones(1, 1));
}

void Graph::backward(Var output, const Matrix& seed) {
  require_shape(seed.rows() == output.rows() && seed.cols() == output.cols(),
                "backward seed shape mismatch");
  add_grad(output, seed);
  for (int i = output.id(); i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

const Matrix* Graph::param_grad(const Parameter& p) const {
  auto it = bound_.find(&p);
  if (it == bound_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.has_grad ? &n.grad : nullptr;
}

// ---- Linear algebra ------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.cols() == b.rows(), "matmul shape mismatch");
  Matrix out;
  out.noalias() = a.value() * b.value();
  Var in[] = {a, b};
  return a.graph()->record(std::move(out), in, [a, b](Graph& g, const Matrix& go) {
    if (a.requires_grad()) g.add_grad(a, go * b.value().transpose());
    if (b.requires_grad()) g.add_grad(b, a.value().transpose() * go);
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.cols() == b.cols(), "matmul_nt shape mismatch");
  Matrix out;
  out.noalias() = a.value() * b.value().transpose();
  Var in[] = {a, b};
  return a.graph()->record(std::move(out), in, [a, b](Graph& g, const Matrix& go) {
    if (a.requires_grad()) g.add_grad(a, go * b.value());
    if (b.requires_grad()) g.add_grad(b, go.transpose() * a.value());
  });
}

Var linear(Var x, Var w, Var bias) {
  require_same_graph(x, w);
  require_shape(x.cols() == w.cols(), "linear input width mismatch");
  Matrix out;
  out.noalias() = x.value() * w.value().transpose();
  if (bias.valid()) {
    require_shape(bias.rows() == 1 && bias.cols() == w.rows(),
                  "linear bias shape mismatch");
    out.rowwise() += bias.value().row(0);
  }
  Var in[] = {x, w, bias};
  return x.graph()->record(
      std::move(out), in, [x, w, bias](Graph& g, const Matrix& go) {
        if (x.requires_grad()) g.add_grad(x, go * w.value());
        if (w.requires_grad()) g.add_grad(w, go.transpose() * x.value());
        if (bias.valid() && bias.requires_grad()) {
          g.add_grad(bias, go.colwise().sum());
        }
      });
}

Var add(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  Var in[] = {a, b};
  return a.graph()->record(a.value() + b.value(), in,
                           [a, b](Graph& g, const Matrix& go) {
                             g.add_grad(a, go);
                             g.add_grad(b, go);
                           });
}

Var sub(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
  Var in[] = {a, b};
  return a.graph()->record(a.value() - b.value(), in,
                           [a, b](Graph& g, const Matrix& go) {
                             g.add_grad(a, go);
                             if (b.requires_grad()) g.add_grad(b, -go);
                           });
}

Var add_row(Var a, Var row) {
  require_same_graph(a, row);
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  Var in[] = {a, row};
  return a.graph()->record(std::move(out), in, [a, row](Graph& g, const Matrix& go) {
    g.add_grad(a, go);
    if (row.requires_grad()) g.add_grad(row, go.colwise().sum());
  });
}

Var scale(Var a, double c) {
  Var in[] = {a};
  return a.graph()->record(a.value() * c, in, [a, c](Graph& g, const Matrix& go) {
    g.add_grad(a, go * c);
  });
}

// ---- Shape ---------------------------------------------------------------

Var slice_rows(Var x, Index start, Index count) {
  require_shape(start >= 0 && count >= 0 && start + count <= x.rows(),
                "slice_rows out of range");
  Matrix out = x.value().middleRows(start, count);
  Var in[] = {x};
  return x.graph()->record(std::move(out), in,
                           [x, start, count](Graph& g, const Matrix& go) {
                             Matrix full = Matrix::Zero(x.rows(), x.cols());
                             full.middleRows(start, count) = go;
                             g.add_grad(x, full);
                           });
}

Var gather_rows(Var x, std::span<const int> rows) {
  std::vector<int> idx(rows.begin(), rows.end());
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require_shape(idx[i] >= 0 && idx[i] < x.rows(), "gather_rows index out of range");
    out.row(static_cast<Index>(i)) = x.value().row(idx[i]);
  }
  Var in[] = {x};
  return x.graph()->record(std::move(out), in,
                           [x, idx = std::move(idx)](Graph& g, const Matrix& go) {
                             Matrix full = Matrix::Zero(x.rows(), x.cols());
                             for (std::size_t i = 0; i < idx.size(); ++i) {
                               full.row(idx[i]) += go.row(static_cast<Index>(i));
                             }
                             g.add_grad(x, full);
                           });
}

Var vstack(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("vstack: no parts");
  Graph* graph = parts.front().graph();
  const Index cols = parts.front().cols();
  Index rows = 0;
  for (const Var& p : parts) {
    require_shape(p.graph() == graph, "vstack across graphs");
    require_shape(p.cols() == cols, "vstack width mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  std::vector<Var> keep(parts.begin(), parts.end());
  return graph->record(std::move(out), parts,
                       [keep = std::move(keep)](Graph& g, const Matrix& go) {
                         Index r = 0;
                         for (const Var& p : keep) {
                           if (p.requires_grad()) g.add_grad(p, go.middleRows(r, p.rows()));
                           r += p.rows();
                         }
                       });
}

Var hcat(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.rows() == b.rows(), "hcat height mismatch");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  Var in[] = {a, b};
  return a.graph()->record(std::move(out), in, [a, b](Graph& g, const Matrix& go) {
    if (a.requires_grad()) g.add_grad(a, go.leftCols(a.cols()));
    if (b.requires_grad()) g.add_grad(b, go.rightCols(b.cols()));
  });
}

Var detach(Var x) { return x.graph()->constant(x.value()); }

// ---- Elementwise / reductions -------------------------------------------

Var relu(Var x) {
  Matrix out = x.value().cwiseMax(0.0);
  Var in[] = {x};
  return x.graph()->record(std::move(out), in, [x](Graph& g, const Matrix& go) {
    g.add_grad(x, (x.value().array() > 0.0).select(go, 0.0));
  });
}

Var quick_gelu(Var x) {
  const Matrix& xv = x.value();
  Matrix sig = xv.unaryExpr([](double v) { return sigmoid(1.702 * v); });
  Matrix out = xv.cwiseProduct(sig);
  Var in[] = {x};
  return x.graph()->record(std::move(out), in,
                           [x, sig = std::move(sig)](Graph& g, const Matrix& go) {
                             const auto s = sig.array();
                             const auto d = s + 1.702 * x.value().array() * s * (1.0 - s);
                             g.add_grad(x, (go.array() * d).matrix());
                           });
}

Var sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  Var in[] = {x};
  return x.graph()->record(std::move(out), in, [x](Graph& g, const Matrix& go) {
    g.add_grad(x, Matrix::Constant(x.rows(), x.cols(), go(0, 0)));
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  require_shape(gamma.rows() == 1 && gamma.cols() == x.cols() &&
                    beta.rows() == 1 && beta.cols() == x.cols(),
                "layer_norm parameter shape mismatch");
  const Matrix& xv = x.value();
  const Index n = xv.rows();
  const Index d = xv.cols();
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Index i = 0; i < n; ++i) {
    const double mean = xv.row(i).mean();
    const double var = (xv.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = xhat;
  out.array().rowwise() *= gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  Var in[] = {x, gamma, beta};
  return x.graph()->record(
      std::move(out), in,
      [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](
          Graph& g, const Matrix& go) {
        if (gamma.requires_grad()) {
          g.add_grad(gamma, (go.array() * xhat.array()).colwise().sum().matrix());
        }
        if (beta.requires_grad()) g.add_grad(beta, go.colwise().sum());
        if (!x.requires_grad()) return;
        const Index d = xhat.cols();
        Matrix dxhat = go;
        dxhat.array().rowwise() *= gamma.value().row(0).array();
        Matrix dx(xhat.rows(), d);
        for (Index i = 0; i < xhat.rows(); ++i) {
          const double mean_dxhat = dxhat.row(i).mean();
          const double mean_dxhat_xhat = dxhat.row(i).dot(xhat.row(i)) / d;
          dx.row(i) = inv_std(i) * (dxhat.row(i).array() - mean_dxhat -
                                    xhat.row(i).array() * mean_dxhat_xhat);
        }
        g.add_grad(x, dx);
      });
}

Var l2_normalize_rows(Var x) {
  const Matrix& xv = x.value();
  Eigen::VectorXd norms = xv.rowwise().norm();
  for (Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0.0)) {
      throw std::invalid_argument("l2_normalize_rows: zero-norm row " +
                                  std::to_string(i));
    }
  }
  Matrix y = norms.cwiseInverse().asDiagonal() * xv;
  Var in[] = {x};
  Matrix out = y;
  return x.graph()->record(
      std::move(out), in,
      [x, y = std::move(y), norms = std::move(norms)](Graph& g, const Matrix& go) {
        Eigen::VectorXd proj = (go.array() * y.array()).rowwise().sum();
        Matrix dx = go - proj.asDiagonal() * y;
        dx = norms.cwiseInverse().asDiagonal() * dx;
        g.add_grad(x, dx);
      });
}

Var rowwise_dot(Var a, Var b) {
  require_same_graph(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(),
                "rowwise_dot shape mismatch");
  Matrix out = (a.value().array() * b.value().array()).rowwise().sum().matrix();
  Var in[] = {a, b};
  return a.graph()->record(std::move(out), in, [a, b](Graph& g, const Matrix& go) {
    const Eigen::VectorXd w = go.col(0);
    if (a.requires_grad()) g.add_grad(a, w.asDiagonal() * b.value());
    if (b.requires_grad()) g.add_grad(b, w.asDiagonal() * a.value());
  });
}

Var attention(Var qkv, int heads, bool causal) {
  const Index n = qkv.rows();
  require_shape(qkv.cols() % 3 == 0, "attention expects packed qkv");
  const Index d = qkv.cols() / 3;
  require_shape(heads > 0 && d % heads == 0, "attention head count must divide width");
  const Index dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix& in_v = qkv.value();

  std::vector<Matrix> probs(static_cast<std::size_t>(heads));
  Matrix out(n, d);
  for (int h = 0; h < heads; ++h) {
    const auto q = in_v.middleCols(h * dh, dh);
    const auto k = in_v.middleCols(d + h * dh, dh);
    const auto v = in_v.middleCols(2 * d + h * dh, dh);
    Matrix scores;
    scores.noalias() = (q * k.transpose()) * inv_sqrt;
    for (Index i = 0; i < n; ++i) {
      const Index visible = causal ? i + 1 : n;
      auto row = scores.row(i).head(visible);
      const double mx = row.maxCoeff();
      row = (row.array() - mx).exp().matrix();
      row /= row.sum();
      if (visible < n) scores.row(i).tail(n - visible).setZero();
    }
    out.middleCols(h * dh, dh).noalias() = scores * v;
    probs[static_cast<std::size_t>(h)] = std::move(scores);
  }

  Var in[] = {qkv};
  return qkv.graph()->record(
      std::move(out), in,
      [qkv, heads, d, dh, inv_sqrt, probs = std::move(probs)](Graph& g,
                                                               const Matrix& go) {
        const Matrix& in_v = qkv.value();
        Matrix dqkv(in_v.rows(), in_v.cols());
        for (int h = 0; h < heads; ++h) {
          const Matrix& a = probs[static_cast<std::size_t>(h)];
          const auto q = in_v.middleCols(h * dh, dh);
          const auto k = in_v.middleCols(d + h * dh, dh);
          const auto v = in_v.middleCols(2 * d + h * dh, dh);
          const auto dout = go.middleCols(h * dh, dh);
          Matrix da;
          da.noalias() = dout * v.transpose();
          dqkv.middleCols(2 * d + h * dh, dh).noalias() = a.transpose() * dout;
          Eigen::VectorXd rowdot = (da.array() * a.array()).rowwise().sum();
          Matrix ds = a.array() * (da.colwise() - rowdot).array();
          ds *= inv_sqrt;
          dqkv.middleCols(h * dh, dh).noalias() = ds * k;
          dqkv.middleCols(d + h * dh, dh).noalias() = ds.transpose() * q;
        }
        g.add_grad(qkv, dqkv);
      });
}

Var gem_pool(Var x, Var q, double eps) {
  require_same_graph(x, q);
  require_shape(x.rows() >= 1, "gem_pool needs at least one row");
  require_shape(q.rows() == 1 && q.cols() == 1, "gem_pool exponent must be 1x1");
  const double qv = q.item();
  require_shape(qv >= 1.0, "gem_pool exponent must be >= 1");
  const Index n = x.rows();
  Matrix clamped = x.value().cwiseMax(eps);
  Matrix powered = clamped.array().pow(qv).matrix();
  Matrix mean = powered.colwise().mean();
  Matrix out = mean.array().pow(1.0 / qv).matrix();
  Matrix result = out;
  Var in[] = {x, q};
  return x.graph()->record(
      std::move(result), in,
      [x, q, qv, eps, n, clamped = std::move(clamped), powered = std::move(powered),
       mean = std::move(mean), out = std::move(out)](Graph& g, const Matrix& go) {
        if (x.requires_grad()) {
          // d out_j / d x_ij = (1/n) c_ij^(q-1) * M_j^(1/q - 1)
          Matrix coef = (mean.array().pow(1.0 / qv - 1.0) * go.array()) / n;
          Matrix dx = clamped.array().pow(qv - 1.0).matrix();
          dx.array().rowwise() *= coef.row(0).array();
          dx = (x.value().array() > eps).select(dx, 0.0);
          g.add_grad(x, dx);
        }
        if (q.requires_grad()) {
          Matrix plogc = (powered.array() * clamped.array().log()).colwise().mean();
          const auto dq = out.array() * (-mean.array().log() / (qv * qv) +
                                         plogc.array() / (qv * mean.array()));
          Matrix dqm(1, 1);
          dqm(0, 0) = (dq * go.array()).sum();
          g.add_grad(q, dqm);
        }
      });
}

Var cross_entropy_sum(Var logits, std::span<const int> labels) {
  const Matrix& z = logits.value();
  require_shape(static_cast<Index>(labels.size()) == z.rows(),
                "cross_entropy_sum label count mismatch");
  std::vector<int> y(labels.begin(), labels.end());
  Matrix probs(z.rows(), z.cols());
  double total = 0.0;
  for (Index i = 0; i < z.rows(); ++i) {
    if (y[i] < 0 || y[i] >= z.cols()) {
      throw std::invalid_argument("cross_entropy_sum: label out of range");
    }
    const double mx = z.row(i).maxCoeff();
    probs.row(i) = (z.row(i).array() - mx).exp().matrix();
    const double denom = probs.row(i).sum();
    probs.row(i) /= denom;
    total += (mx + std::log(denom)) - z(i, y[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Var in[] = {logits};
  return logits.graph()->record(
      std::move(out), in,
      [logits, y = std::move(y), probs = std::move(probs)](Graph& g, const Matrix& go) {
        Matrix d = probs;
        for (std::size_t i = 0; i < y.size(); ++i) d(static_cast<Index>(i), y[i]) -= 1.0;
        g.add_grad(logits, d * go(0, 0));
      });
}

Var softplus_sum(Var s, const Matrix& weights, double slope, double shift) {
  require_shape(weights.rows() == s.rows() && weights.cols() == s.cols(),
                "softplus_sum weight shape mismatch");
  const Matrix& sv = s.value();
  double total = 0.0;
  for (Index i = 0; i < sv.rows(); ++i) {
    for (Index j = 0; j < sv.cols(); ++j) {
      const double w = weights(i, j);
      if (w == 0.0) continue;
      total += w * softplus(slope * (sv(i, j) - shift));
    }
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  Var in[] = {s};
  return s.graph()->record(
      std::move(out), in, [s, weights, slope, shift](Graph& g, const Matrix& go) {
        const Matrix& sv = s.value();
        Matrix d = Matrix::Zero(sv.rows(), sv.cols());
        for (Index i = 0; i < sv.rows(); ++i) {
          for (Index j = 0; j < sv.cols(); ++j) {
            const double w = weights(i, j);
            if (w == 0.0) continue;
            d(i, j) = w * slope * sigmoid(slope * (sv(i, j) - shift));
          }
        }
        g.add_grad(s, d * go(0, 0));
      });
}

Var masked_row_extreme(Var s, const Matrix& mask, bool take_max) {
  require_shape(mask.rows() == s.rows() && mask.cols() == s.cols(),
                "masked_row_extreme mask shape mismatch");
  const Matrix& sv = s.value();
  std::vector<std::pair<Index, Index>> picks;
  for (Index i = 0; i < sv.rows(); ++i) {
    Index best = -1;
    for (Index j = 0; j < sv.cols(); ++j) {
      if (mask(i, j) == 0.0) continue;
      if (best < 0 || (take_max ? sv(i, j) > sv(i, best) : sv(i, j) < sv(i, best))) {
        best = j;
      }
    }
    if (best >= 0) picks.emplace_back(i, best);
  }
  Matrix out(static_cast<Index>(picks.size()), 1);
  for (std::size_t r = 0; r < picks.size(); ++r) {
    out(static_cast<Index>(r), 0) = sv(picks[r].first, picks[r].second);
  }
  Var in[] = {s};
  return s.graph()->record(std::move(out), in,
                           [s, picks = std::move(picks)](Graph& g, const Matrix& go) {
                             Matrix d = Matrix::Zero(s.rows(), s.cols());
                             for (std::size_t r = 0; r < picks.size(); ++r) {
                               d(picks[r].first, picks[r].second) +=
                                   go(static_cast<Index>(r), 0);
                             }
                             g.add_grad(s, d);
                           });
}

}  // namespace tpsearch::ag
