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

// Text-to-image retrieval metrics: ranking by cosine similarity, top-k
// accuracy and interpolation-free (reID-style) mean average precision.

#ifndef TPSEARCH_EVAL_H_
#define TPSEARCH_EVAL_H_

#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/autograd.h"

namespace tpsearch {

struct RetrievalIndex {
  ag::Matrix gallery;  // N x D image features
  std::vector<int> gallery_labels;
  ag::Matrix queries;  // Q x D text features
  std::vector<int> query_labels;

  // Throws std::invalid_argument on size mismatches or non-finite features.
  void validate() const;
};

// Gallery indices by descending cosine similarity to `query`; ties keep
// ascending index order.
std::vector<int> rank(const Eigen::RowVectorXd& query, const ag::Matrix& gallery);

// Fraction of queries with a same-identity image among the first k.
// Throws std::invalid_argument for k outside [1, N].
std::map<int, double> topk_accuracy(const RetrievalIndex& index, std::span<const int> ks);

// Mean over queries of (1/P) * sum over positive ranks r of precision@r.
// Throws std::invalid_argument when a query has no gallery positive.
double mean_ap(const RetrievalIndex& index);

struct RetrievalReport {
  double r1 = 0.0;
  double r5 = 0.0;
  double r10 = 0.0;
  double map = 0.0;

  nlohmann::json to_json() const;
};

// R@1/5/10 (k capped at N) and mAP.
RetrievalReport evaluate_retrieval(const RetrievalIndex& index);

}  // namespace tpsearch

#endif  // TPSEARCH_EVAL_H_
