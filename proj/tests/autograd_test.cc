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
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"

namespace tpsearch::ag {
namespace {

using testing::numeric_gradient;
using testing::random_normal;
using testing::random_uniform;
using testing::relative_error;

using UnaryOp = std::function<Var(Graph&, Var)>;

// Checks d(sum(R .* op(x)))/dx against central differences for a random R.
void ExpectGradient(const UnaryOp& op, const Matrix& x, double tol = 1e-6) {
  Matrix probe;
  {
    Graph g(false);
    Var out = op(g, g.constant(x));
    probe = random_normal(static_cast<int>(out.rows()), static_cast<int>(out.cols()), 99);
  }
  Graph g;
  Var leaf = g.leaf(x);
  Var out = op(g, leaf);
  g.backward(out, probe);
  const Matrix analytic = leaf.grad();
  const Matrix numeric = numeric_gradient(
      [&](const Matrix& m) {
        Graph h(false);
        return (op(h, h.constant(m)).value().array() * probe.array()).sum();
      },
      x);
  EXPECT_LT(relative_error(analytic, numeric), tol)
      << "analytic:\n" << analytic << "\nnumeric:\n" << numeric;
}

TEST(AutogradTest, MatmulBothSides) {
  const Matrix a = random_normal(3, 4, 1);
  const Matrix b = random_normal(4, 2, 2);
  ExpectGradient([&](Graph& g, Var x) { return matmul(x, g.constant(b)); }, a);
  ExpectGradient([&](Graph& g, Var x) { return matmul(g.constant(a), x); }, b);
}

TEST(AutogradTest, MatmulTransposedBothSides) {
  const Matrix a = random_normal(3, 4, 3);
  const Matrix b = random_normal(5, 4, 4);
  ExpectGradient([&](Graph& g, Var x) { return matmul_nt(x, g.constant(b)); }, a);
  ExpectGradient([&](Graph& g, Var x) { return matmul_nt(g.constant(a), x); }, b);
}

TEST(AutogradTest, LinearWithBias) {
  const Matrix x = random_normal(3, 4, 5);
  const Matrix w = random_normal(6, 4, 6);
  const Matrix bias = random_normal(1, 6, 7);
  ExpectGradient([&](Graph& g, Var v) { return linear(v, g.constant(w), g.constant(bias)); }, x);
  ExpectGradient([&](Graph& g, Var v) { return linear(g.constant(x), v, g.constant(bias)); }, w);
  ExpectGradient([&](Graph& g, Var v) { return linear(g.constant(x), g.constant(w), v); }, bias);
}

TEST(AutogradTest, ElementwiseArithmetic) {
  const Matrix a = random_normal(3, 4, 8);
  const Matrix b = random_normal(3, 4, 9);
  ExpectGradient([&](Graph& g, Var x) { return add(x, g.constant(b)); }, a);
  ExpectGradient([&](Graph& g, Var x) { return sub(g.constant(b), x); }, a);
  ExpectGradient([&](Graph&, Var x) { return scale(x, -2.5); }, a);
  ExpectGradient([&](Graph& g, Var x) { return add_row(g.constant(a), x); },
                 random_normal(1, 4, 10));
}

TEST(AutogradTest, RowManipulation) {
  const Matrix a = random_normal(5, 3, 11);
  ExpectGradient([](Graph&, Var x) { return slice_rows(x, 1, 3); }, a);
  const std::vector<int> rows = {4, 0, 4, 2};
  ExpectGradient([&](Graph&, Var x) { return gather_rows(x, rows); }, a);
  ExpectGradient(
      [&](Graph& g, Var x) {
        std::vector<Var> parts = {x, g.constant(random_normal(2, 3, 12)), x};
        return vstack(parts);
      },
      a);
  ExpectGradient([&](Graph& g, Var x) { return hcat(x, g.constant(random_normal(5, 2, 13))); },
                 a);
}

TEST(AutogradTest, Activations) {
  Matrix a = random_normal(4, 5, 14);
  // Keep relu away from its kink so central differences are valid.
  for (Index i = 0; i < a.size(); ++i) {
    if (std::abs(a.data()[i]) < 0.05) a.data()[i] = 0.3;
  }
  ExpectGradient([](Graph&, Var x) { return relu(x); }, a);
  ExpectGradient([](Graph&, Var x) { return quick_gelu(x); }, a);
  ExpectGradient([](Graph&, Var x) { return sum(x); }, a);
}

TEST(AutogradTest, LayerNormAllInputs) {
  const Matrix x = random_normal(3, 6, 15);
  const Matrix gamma = random_normal(1, 6, 16);
  const Matrix beta = random_normal(1, 6, 17);
  ExpectGradient(
      [&](Graph& g, Var v) { return layer_norm(v, g.constant(gamma), g.constant(beta)); }, x);
  ExpectGradient(
      [&](Graph& g, Var v) { return layer_norm(g.constant(x), v, g.constant(beta)); }, gamma);
  ExpectGradient(
      [&](Graph& g, Var v) { return layer_norm(g.constant(x), g.constant(gamma), v); }, beta);
}

TEST(AutogradTest, NormalizationAndDots) {
  const Matrix a = random_normal(4, 5, 18);
  const Matrix b = random_normal(4, 5, 19);
  ExpectGradient([](Graph&, Var x) { return l2_normalize_rows(x); }, a);
  ExpectGradient([&](Graph& g, Var x) { return rowwise_dot(x, g.constant(b)); }, a);
}

TEST(AutogradTest, NormalizeRejectsZeroRow) {
  Graph g;
  EXPECT_THROW(l2_normalize_rows(g.constant(Matrix::Zero(2, 3))), std::invalid_argument);
}

TEST(AutogradTest, AttentionCausalAndFull) {
  const Matrix qkv = random_normal(5, 12, 20);
  ExpectGradient([](Graph&, Var x) { return attention(x, 2, false); }, qkv);
  ExpectGradient([](Graph&, Var x) { return attention(x, 2, true); }, qkv);
}

TEST(AutogradTest, CausalAttentionIgnoresFutureRows) {
  Matrix qkv = random_normal(4, 6, 21);
  Graph g(false);
  const Matrix before = attention(g.constant(qkv), 1, true).value();
  qkv.row(3).setConstant(7.0);
  const Matrix after = attention(g.constant(qkv), 1, true).value();
  EXPECT_TRUE(before.topRows(3).isApprox(after.topRows(3), 0.0));
}

TEST(AutogradTest, GemPoolInputAndExponent) {
  const Matrix x = random_uniform(6, 3, 22, 0.1, 2.0);
  ExpectGradient(
      [](Graph& g, Var v) { return gem_pool(v, g.constant(Matrix::Constant(1, 1, 3.0)), 1e-6); },
      x);
  ExpectGradient([&](Graph& g, Var q) { return gem_pool(g.constant(x), q, 1e-6); },
                 Matrix::Constant(1, 1, 2.5));
}

TEST(AutogradTest, CrossEntropySum) {
  const Matrix logits = random_normal(4, 5, 23);
  const std::vector<int> labels = {0, 3, 4, 1};
  ExpectGradient([&](Graph&, Var x) { return cross_entropy_sum(x, labels); }, logits);
  Graph g;
  const std::vector<int> bad = {0, 5, 0, 0};
  EXPECT_THROW(cross_entropy_sum(g.constant(logits), bad), std::invalid_argument);
}

TEST(AutogradTest, SoftplusSumValueAndGradient) {
  const Matrix s = random_uniform(3, 3, 24, -1, 1);
  const Matrix w = random_uniform(3, 3, 25, 0, 2);
  ExpectGradient([&](Graph&, Var x) { return softplus_sum(x, w, -10.0, 0.6); }, s);
  Graph g(false);
  const double got = softplus_sum(g.constant(s), w, 40.0, 0.4).item();
  double want = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    want += w.data()[i] * std::log1p(std::exp(40.0 * (s.data()[i] - 0.4)));
  }
  EXPECT_NEAR(got, want, 1e-10);
}

TEST(AutogradTest, MaskedRowExtreme) {
  const Matrix s = random_normal(3, 4, 26);
  Matrix mask = Matrix::Ones(3, 4);
  mask(0, 1) = 0;
  mask(2, 3) = 0;
  ExpectGradient([&](Graph&, Var x) { return masked_row_extreme(x, mask, true); }, s);
  ExpectGradient([&](Graph&, Var x) { return masked_row_extreme(x, mask, false); }, s);
}

TEST(AutogradTest, GradientAccumulatesOverReuse) {
  Graph g;
  Var x = g.leaf(Matrix::Constant(1, 1, 3.0));
  Var y = add(scale(x, 2.0), scale(x, 5.0));
  g.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 7.0);
}

TEST(AutogradTest, FrozenParameterBindsAsConstant) {
  Parameter p("w", Matrix::Ones(2, 2));
  p.frozen = true;
  Graph g;
  Var w = g.param(p);
  EXPECT_FALSE(w.requires_grad());
  g.backward(sum(matmul(g.leaf(Matrix::Ones(1, 2)), w)));
  EXPECT_EQ(g.param_grad(p), nullptr);
}

TEST(AutogradTest, ParameterBindingIsCachedPerGraph) {
  Parameter p("w", Matrix::Ones(2, 2));
  Graph g;
  EXPECT_EQ(g.param(p).id(), g.param(p).id());
  g.backward(sum(add(g.param(p), g.param(p))));
  ASSERT_NE(g.param_grad(p), nullptr);
  EXPECT_TRUE(g.param_grad(p)->isApprox(Matrix::Constant(2, 2, 2.0)));
}

TEST(AutogradTest, NoGradGraphRecordsNoBackward) {
  Graph g(false);
  Var x = g.leaf(Matrix::Ones(2, 2));
  EXPECT_FALSE(x.requires_grad());
  EXPECT_FALSE(relu(x).requires_grad());
}

}  // namespace
}  // namespace tpsearch::ag
