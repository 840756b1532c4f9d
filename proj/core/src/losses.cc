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

#include "tpsearch/losses.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tpsearch/seeds.h"

namespace tpsearch {
namespace {

using ag::Matrix;
using ag::Var;

Var zero_scalar(ag::Graph& g) { return g.constant(Matrix::Zero(1, 1)); }

std::vector<int> owner_labels(const BatchFeatures& batch, const std::vector<int>& owner) {
  std::vector<int> out;
  out.reserve(owner.size());
  for (int o : owner) {
    if (o < 0 || o >= batch.batch_size()) {
      throw std::invalid_argument("loss: owner index out of range");
    }
    out.push_back(batch.labels[static_cast<std::size_t>(o)]);
  }
  return out;
}

void check_batch(const BatchFeatures& batch) {
  if (!batch.v.valid() || !batch.t.valid()) {
    throw std::invalid_argument("loss: batch is missing image or text features");
  }
  if (batch.v.rows() != batch.batch_size() || batch.t.rows() != batch.batch_size()) {
    throw std::invalid_argument("loss: feature rows do not match label count");
  }
  if (batch.has_mids() && static_cast<std::size_t>(batch.t_mid.rows()) != batch.mid_owner.size()) {
    throw std::invalid_argument("loss: mid_owner size mismatch");
  }
  if (batch.has_prompts() &&
      (static_cast<std::size_t>(batch.t_pmt.rows()) != batch.pmt_owner.size() ||
       batch.pmt_owner.size() != batch.pmt_group.size())) {
    throw std::invalid_argument("loss: prompt owner/group size mismatch");
  }
}

Var normalized_logits(Var x, Var w_normalized, double s) {
  return ag::scale(ag::matmul_nt(ag::l2_normalize_rows(x), w_normalized), s);
}

}  // namespace

std::string_view align_mode_key(AlignMode mode) {
  switch (mode) {
    case AlignMode::kAllPairs:
      return "all_pairs";
    case AlignMode::kDiagonalOnly:
      return "diagonal_only";
    case AlignMode::kHardest:
      return "hardest";
  }
  return "unknown";
}

AlignMode parse_align_mode(std::string_view key) {
  if (key == "all_pairs") return AlignMode::kAllPairs;
  if (key == "diagonal_only") return AlignMode::kDiagonalOnly;
  if (key == "hardest") return AlignMode::kHardest;
  throw std::invalid_argument("unknown align mode '" + std::string(key) + "'");
}

void LossParams::validate() const {
  for (double scale : {s, tau_p, tau_n, tau_mid}) {
    if (!(scale > 0)) throw std::invalid_argument("loss: scales must be > 0");
  }
  for (double t : {alpha, beta, gamma, th}) {
    if (t < -1.0 || t > 1.0) throw std::invalid_argument("loss: thresholds must lie in [-1, 1]");
  }
  if (lambda0 < 0 || lambda1 < 0) throw std::invalid_argument("loss: lambdas must be >= 0");
}

void to_json(nlohmann::json& j, const LossParams& p) {
  j = {{"s", p.s},           {"alpha", p.alpha},     {"beta", p.beta},
       {"gamma", p.gamma},   {"tau_p", p.tau_p},     {"tau_n", p.tau_n},
       {"tau_mid", p.tau_mid}, {"lambda0", p.lambda0}, {"lambda1", p.lambda1},
       {"th", p.th},         {"align_mode", std::string(align_mode_key(p.align_mode))}};
}

void from_json(const nlohmann::json& j, LossParams& p) {
  const LossParams d;
  p.s = j.value("s", d.s);
  p.alpha = j.value("alpha", d.alpha);
  p.beta = j.value("beta", d.beta);
  p.gamma = j.value("gamma", d.gamma);
  p.tau_p = j.value("tau_p", d.tau_p);
  p.tau_n = j.value("tau_n", d.tau_n);
  p.tau_mid = j.value("tau_mid", d.tau_mid);
  p.lambda0 = j.value("lambda0", d.lambda0);
  p.lambda1 = j.value("lambda1", d.lambda1);
  p.th = j.value("th", d.th);
  p.align_mode = parse_align_mode(j.value("align_mode", std::string("all_pairs")));
}

ClassifierWeights ClassifierWeights::init(int n_classes, int feature_dim, std::uint64_t seed) {
  if (n_classes < 1 || feature_dim < 1) {
    throw std::invalid_argument("ClassifierWeights: bad shape");
  }
  auto make = [&](std::uint64_t s) {
    std::mt19937_64 rng(s);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(n_classes, feature_dim);
    for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };
  ClassifierWeights w;
  w.w_v = ag::Parameter("head.cls_visual", make(derive_seed(seed, "w_v")), false);
  w.w_t = ag::Parameter("head.cls_text", make(derive_seed(seed, "w_t")), false);
  return w;
}

double cosine_sim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_sim: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_sim: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Var loss_cls(const BatchFeatures& batch, Var w_v, Var w_t, const LossParams& p) {
  check_batch(batch);
  const ag::Index classes = w_v.rows();
  if (w_t.rows() != classes) throw std::invalid_argument("loss_cls: classifier size mismatch");
  for (int y : batch.labels) {
    if (y < 0 || y >= classes) {
      throw std::invalid_argument("loss_cls: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(classes) + ")");
    }
  }
  ag::Graph& g = *batch.v.graph();
  Var wv = ag::l2_normalize_rows(w_v);
  Var wt = ag::l2_normalize_rows(w_t);
  Var visual = ag::cross_entropy_sum(normalized_logits(batch.v, wv, p.s), batch.labels);
  Var textual = ag::cross_entropy_sum(normalized_logits(batch.t, wt, p.s), batch.labels);
  Var partial = zero_scalar(g);
  if (batch.has_mids()) {
    partial = ag::cross_entropy_sum(normalized_logits(batch.t_mid, wt, p.s),
                                    owner_labels(batch, batch.mid_owner));
  }
  return ag::add(ag::add(visual, textual), partial);
}

Var loss_align(const BatchFeatures& batch, const LossParams& p) {
  check_batch(batch);
  ag::Graph& g = *batch.v.graph();
  const int b = batch.batch_size();
  Var vn = ag::l2_normalize_rows(batch.v);
  Var tn = ag::l2_normalize_rows(batch.t);
  Var sim = ag::matmul_nt(vn, tn);

  Matrix pos_mask = Matrix::Zero(b, b);
  Matrix neg_mask = Matrix::Zero(b, b);
  for (int i = 0; i < b; ++i) {
    for (int j = 0; j < b; ++j) {
      const bool same = batch.labels[static_cast<std::size_t>(i)] ==
                        batch.labels[static_cast<std::size_t>(j)];
      if (same) {
        pos_mask(i, j) = (p.align_mode == AlignMode::kDiagonalOnly && i != j) ? 0.0 : 1.0;
      } else {
        neg_mask(i, j) = 1.0;
      }
    }
  }

  Var pos, neg;
  if (p.align_mode == AlignMode::kHardest) {
    Var hardest_pos = ag::masked_row_extreme(sim, pos_mask, false);
    Var hardest_neg = ag::masked_row_extreme(sim, neg_mask, true);
    pos = ag::softplus_sum(hardest_pos, Matrix::Ones(hardest_pos.rows(), 1), -p.tau_p, p.alpha);
    neg = ag::softplus_sum(hardest_neg, Matrix::Ones(hardest_neg.rows(), 1), p.tau_n, p.beta);
  } else {
    pos = ag::softplus_sum(sim, pos_mask, -p.tau_p, p.alpha);
    neg = ag::softplus_sum(sim, neg_mask, p.tau_n, p.beta);
  }

  Var partial = zero_scalar(g);
  if (batch.has_mids()) {
    Var anchors = ag::gather_rows(vn, batch.mid_owner);
    Var mid_sim = ag::rowwise_dot(anchors, ag::l2_normalize_rows(batch.t_mid));
    partial = ag::softplus_sum(mid_sim, Matrix::Ones(mid_sim.rows(), 1), -p.tau_mid, p.gamma);
  }
  return ag::add(ag::add(pos, neg), partial);
}

Var loss_int(const BatchFeatures& batch) {
  check_batch(batch);
  ag::Graph& g = *batch.v.graph();
  if (!batch.has_mids()) return zero_scalar(g);
  Var vn = ag::l2_normalize_rows(batch.v);
  Var tn = ag::l2_normalize_rows(batch.t);
  Var anchors = ag::gather_rows(vn, batch.mid_owner);
  Var complete = ag::gather_rows(tn, batch.mid_owner);
  Var partial_sim = ag::rowwise_dot(anchors, ag::l2_normalize_rows(batch.t_mid));
  Var complete_sim = ag::rowwise_dot(anchors, complete);
  return ag::sum(ag::relu(ag::sub(partial_sim, complete_sim)));
}

PromptSets build_prompt_sets(const BatchFeatures& batch, const LossParams& p) {
  check_batch(batch);
  PromptSets sets;
  if (!batch.has_prompts()) return sets;
  const Matrix& raw = batch.t_pmt.value();
  const Eigen::VectorXd norms = raw.rowwise().norm();
  for (ag::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0)) throw std::invalid_argument("build_prompt_sets: zero prompt feature");
  }
  const Matrix unit = norms.cwiseInverse().asDiagonal() * raw;
  const Matrix sim = unit * unit.transpose();
  const std::vector<int> labels = owner_labels(batch, batch.pmt_owner);
  const auto n = static_cast<int>(labels.size());
  sets.positives.resize(static_cast<std::size_t>(n));
  sets.negatives.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    for (int q = 0; q < n; ++q) {
      if (batch.pmt_group[static_cast<std::size_t>(q)] !=
          batch.pmt_group[static_cast<std::size_t>(r)]) {
        continue;
      }
      const bool positive = labels[static_cast<std::size_t>(q)] ==
                                labels[static_cast<std::size_t>(r)] ||
                            sim(q, r) >= p.th;
      (positive ? sets.positives : sets.negatives)[static_cast<std::size_t>(r)].push_back(q);
    }
  }
  return sets;
}

Var loss_pmt(const BatchFeatures& batch, const PromptSets& sets, const LossParams& p) {
  check_batch(batch);
  ag::Graph& g = *batch.v.graph();
  if (!batch.has_prompts()) return zero_scalar(g);
  const auto n = static_cast<std::size_t>(batch.t_pmt.rows());
  if (sets.positives.size() != n || sets.negatives.size() != n) {
    throw std::invalid_argument("loss_pmt: prompt sets do not match the batch");
  }
  // Prompt features enter as constants: no gradient reaches the text tower.
  const Matrix& raw = batch.t_pmt.value();
  const Eigen::VectorXd norms = raw.rowwise().norm();
  Var prompts = g.constant(norms.cwiseInverse().asDiagonal() * raw);
  Var vn = ag::l2_normalize_rows(batch.v);
  Var sim = ag::matmul_nt(vn, prompts);

  Matrix pos_w = Matrix::Zero(batch.batch_size(), static_cast<ag::Index>(n));
  Matrix neg_w = Matrix::Zero(batch.batch_size(), static_cast<ag::Index>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const int anchor = batch.pmt_owner[r];
    for (int q : sets.positives[r]) pos_w(anchor, q) += 1.0;
    for (int q : sets.negatives[r]) neg_w(anchor, q) += 1.0;
  }
  Var pos = ag::softplus_sum(sim, pos_w, -p.tau_p, p.alpha);
  Var neg = ag::softplus_sum(sim, neg_w, p.tau_n, p.beta);
  return ag::add(pos, neg);
}

double loss_total(double cls, double align, double integrity, double prompt,
                  const LossParams& p) {
  return ((cls + align) + p.lambda0 * integrity) + p.lambda1 * prompt;
}

Var loss_total(Var cls, Var align, Var integrity, Var prompt, const LossParams& p) {
  return ag::add(ag::add(ag::add(cls, align), ag::scale(integrity, p.lambda0)),
                 ag::scale(prompt, p.lambda1));
}

LossComponents LossTerms::values() const {
  return {cls.item(), align.item(), integrity.item(), prompt.item(), total.item()};
}

LossTerms compute_losses(const BatchFeatures& batch, Var w_v, Var w_t, const LossParams& p) {
  LossTerms t;
  t.cls = loss_cls(batch, w_v, w_t, p);
  t.align = loss_align(batch, p);
  t.integrity = loss_int(batch);
  t.prompt = loss_pmt(batch, build_prompt_sets(batch, p), p);
  t.total = loss_total(t.cls, t.align, t.integrity, t.prompt, p);
  return t;
}

}  // namespace tpsearch
