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

// Training objective: normalized-softmax identity classification, the
// cross-modal alignment loss, the integrity ranking hinge for incomplete
// descriptions, and the prompt loss whose gradient reaches image features
// only. All similarities are cosine similarities of the 2d concat features.

#ifndef TPSEARCH_LOSSES_H_
#define TPSEARCH_LOSSES_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/autograd.h"

namespace tpsearch {

enum class AlignMode {
  kAllPairs,      // every intra-identity pair positive, inter-identity negative
  kDiagonalOnly,  // only (v_i, t_i) positive
  kHardest,       // hardest positive / negative per image anchor
};

std::string_view align_mode_key(AlignMode mode);
AlignMode parse_align_mode(std::string_view key);

struct LossParams {
  double s = 30.0;
  double alpha = 0.6;
  double beta = 0.4;
  double gamma = 0.6;
  double tau_p = 10.0;
  double tau_n = 40.0;
  double tau_mid = 15.0;
  double lambda0 = 0.0001;
  double lambda1 = 0.01;
  double th = 0.98;
  int n_classes = 0;
  AlignMode align_mode = AlignMode::kAllPairs;

  // Throws std::invalid_argument for non-positive scales or thresholds
  // outside [-1, 1].
  void validate() const;
};

void to_json(nlohmann::json& j, const LossParams& p);
void from_json(const nlohmann::json& j, LossParams& p);

// Per-modality identity classifiers, C x 2d. Rows are L2-normalized inside
// loss_cls on every call.
struct ClassifierWeights {
  ag::Parameter w_v;
  ag::Parameter w_t;

  static ClassifierWeights init(int n_classes, int feature_dim, std::uint64_t seed);
};

struct BatchFeatures {
  ag::Var v;  // B x 2d image features
  ag::Var t;  // B x 2d caption features
  // M x 2d incomplete-description features; mid_owner[m] is the batch row.
  ag::Var t_mid;
  std::vector<int> mid_owner;
  // P x 2d prompt features; treated as constants by the prompt loss.
  ag::Var t_pmt;
  std::vector<int> pmt_owner;
  std::vector<std::string> pmt_group;
  std::vector<int> labels;

  int batch_size() const { return static_cast<int>(labels.size()); }
  bool has_mids() const { return t_mid.valid() && t_mid.rows() > 0; }
  bool has_prompts() const { return t_pmt.valid() && t_pmt.rows() > 0; }
};

// Throws std::invalid_argument when either vector is zero or sizes differ.
double cosine_sim(std::span<const double> a, std::span<const double> b);

ag::Var loss_cls(const BatchFeatures& batch, ag::Var w_v, ag::Var w_t, const LossParams& p);
ag::Var loss_align(const BatchFeatures& batch, const LossParams& p);
ag::Var loss_int(const BatchFeatures& batch);

// For every prompt row r: the same-group prompt rows that count as positive
// (same identity, or prompt similarity >= th) and negative (the rest).
struct PromptSets {
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> negatives;
};
PromptSets build_prompt_sets(const BatchFeatures& batch, const LossParams& p);

ag::Var loss_pmt(const BatchFeatures& batch, const PromptSets& sets, const LossParams& p);

struct LossComponents {
  double cls = 0.0;
  double align = 0.0;
  double integrity = 0.0;
  double prompt = 0.0;
  double total = 0.0;
};

// cls + align + lambda0 * integrity + lambda1 * prompt
double loss_total(double cls, double align, double integrity, double prompt,
                  const LossParams& p);
ag::Var loss_total(ag::Var cls, ag::Var align, ag::Var integrity, ag::Var prompt,
                   const LossParams& p);

// Evaluates all four losses and their weighted total on one graph.
struct LossTerms {
  ag::Var cls, align, integrity, prompt, total;
  LossComponents values() const;
};
LossTerms compute_losses(const BatchFeatures& batch, ag::Var w_v, ag::Var w_t,
                         const LossParams& p);

}  // namespace tpsearch

#endif  // TPSEARCH_LOSSES_H_
