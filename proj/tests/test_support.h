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

// Shared helpers for the unit and acceptance tests: random fixtures,
// finite-difference gradients and brute-force reference implementations
// that deliberately avoid the library code paths they check.

#ifndef TPSEARCH_TESTS_TEST_SUPPORT_H_
#define TPSEARCH_TESTS_TEST_SUPPORT_H_

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tpsearch/autograd.h"
#include "tpsearch/config.h"
#include "tpsearch/corpus.h"
#include "tpsearch/encoders.h"
#include "tpsearch/lexicon.h"
#include "tpsearch/losses.h"
#include "tpsearch/midgen.h"
#include "tpsearch/textparse.h"

namespace tpsearch::testing {

ag::Matrix random_normal(int rows, int cols, std::uint64_t seed, double stddev = 1.0);
ag::Matrix random_uniform(int rows, int cols, std::uint64_t seed, double lo, double hi);

// Central differences of `f` around `x`, one coordinate at a time.
ag::Matrix numeric_gradient(const std::function<double(const ag::Matrix&)>& f,
                            const ag::Matrix& x, double h = 1e-5);

// ||a - b|| / max(||a||, ||b||), with 0 when both are zero.
double relative_error(const ag::Matrix& a, const ag::Matrix& b);

// A small encoder that keeps gradient checks fast.
EncoderConfig tiny_encoder_config();

// A 12-identity corpus with a 4x3 grid and the tiny encoder; trains a few
// epochs in seconds.
AppConfig small_app_config();

// A phrase with `n_adjectives` placeholder adjectives.
AttributePhrase make_phrase(const std::string& noun, NounCategory category, AttributeItem item,
                            int n_adjectives);

// --- MID oracle --------------------------------------------------------------

// Every state tuple over the raw per-phrase state alphabet, collapsed to its
// effective content and deduplicated; the unchanged and empty tuples are
// removed. Each entry is a per-phrase string such as "full", "noun", "adj",
// "none".
std::set<std::vector<std::string>> brute_force_mid_contents(const std::vector<int>& adj_counts,
                                                            MidMode mode);

// The same effective content computed from a variant's `kept` states.
std::vector<std::string> effective_content(const MIDVariant& v, const std::vector<int>& adj_counts);

// --- Prompt grammar oracle --------------------------------------------------

// Regexes for every prompt template, built from the lexicon word lists.
// Returns the group keys of all templates that match `text` exactly.
std::vector<std::string> matching_prompt_templates(const std::string& text,
                                                   const Lexicon& lexicon);

// --- Retrieval oracles -------------------------------------------------------

// 1-based rank of gallery item `j` for query `q`: one plus the number of items
// that beat it (higher similarity, or equal similarity and lower index).
int brute_force_rank(const ag::Matrix& gallery, const Eigen::RowVectorXd& query, int j);
double brute_force_topk(const ag::Matrix& gallery, const std::vector<int>& gallery_labels,
                        const ag::Matrix& queries, const std::vector<int>& query_labels, int k);
double brute_force_map(const ag::Matrix& gallery, const std::vector<int>& gallery_labels,
                       const ag::Matrix& queries, const std::vector<int>& query_labels);

// --- Loss oracles ------------------------------------------------------------

// Plain-loop scalar versions of the losses over raw feature matrices.
struct ScalarBatch {
  ag::Matrix v, t, t_mid, t_pmt;
  std::vector<int> labels, mid_owner, pmt_owner;
  std::vector<std::string> pmt_group;
};

double scalar_cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b);
double scalar_loss_cls(const ScalarBatch& b, const ag::Matrix& w_v, const ag::Matrix& w_t,
                       const LossParams& p);
double scalar_loss_align(const ScalarBatch& b, const LossParams& p);
double scalar_loss_int(const ScalarBatch& b);
double scalar_loss_pmt(const ScalarBatch& b, const LossParams& p);

// A random batch with B rows, `n_classes` classes, k_m MIDs and k_p prompts
// per row. Prompt groups cycle through a few keys.
ScalarBatch random_scalar_batch(int b, int dim, int n_classes, int k_m, int k_p,
                                std::uint64_t seed);

// Binds a scalar batch as graph leaves (every feature matrix receives
// gradient).
BatchFeatures bind_leaves(ag::Graph& g, const ScalarBatch& b);

}  // namespace tpsearch::testing

#endif  // TPSEARCH_TESTS_TEST_SUPPORT_H_
