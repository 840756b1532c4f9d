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

#include "tpsearch/eval.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tpsearch {
namespace {

ag::Matrix normalize_rows(const ag::Matrix& m) {
  Eigen::VectorXd norms = m.rowwise().norm();
  for (ag::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) > 0)) norms(i) = 1.0;
  }
  return norms.cwiseInverse().asDiagonal() * m;
}

std::vector<int> rank_scores(const Eigen::VectorXd& scores) {
  std::vector<int> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  return order;
}

// Rankings of every query against the gallery.
std::vector<std::vector<int>> rank_all(const RetrievalIndex& index) {
  const ag::Matrix g = normalize_rows(index.gallery);
  const ag::Matrix q = normalize_rows(index.queries);
  const ag::Matrix scores = q * g.transpose();
  std::vector<std::vector<int>> out;
  out.reserve(static_cast<std::size_t>(scores.rows()));
  for (ag::Index i = 0; i < scores.rows(); ++i) out.push_back(rank_scores(scores.row(i).transpose()));
  return out;
}

}  // namespace

void RetrievalIndex::validate() const {
  if (gallery.rows() == 0) throw std::invalid_argument("retrieval: empty gallery");
  if (static_cast<std::size_t>(gallery.rows()) != gallery_labels.size() ||
      static_cast<std::size_t>(queries.rows()) != query_labels.size()) {
    throw std::invalid_argument("retrieval: label count mismatch");
  }
  if (queries.rows() > 0 && queries.cols() != gallery.cols()) {
    throw std::invalid_argument("retrieval: feature width mismatch");
  }
  if (!gallery.allFinite() || !queries.allFinite()) {
    throw std::invalid_argument("retrieval: non-finite features");
  }
}

std::vector<int> rank(const Eigen::RowVectorXd& query, const ag::Matrix& gallery) {
  if (gallery.rows() == 0) throw std::invalid_argument("rank: empty gallery");
  const double qn = query.norm();
  const Eigen::RowVectorXd q = qn > 0 ? Eigen::RowVectorXd(query / qn) : query;
  const Eigen::VectorXd scores = normalize_rows(gallery) * q.transpose();
  return rank_scores(scores);
}

std::map<int, double> topk_accuracy(const RetrievalIndex& index, std::span<const int> ks) {
  index.validate();
  const auto n = static_cast<int>(index.gallery.rows());
  for (int k : ks) {
    if (k < 1 || k > n) {
      throw std::invalid_argument("topk_accuracy: k=" + std::to_string(k) + " outside [1, " +
                                  std::to_string(n) + "]");
    }
  }
  const auto rankings = rank_all(index);
  // First rank (0-based) at which each query hits its identity.
  std::vector<int> first_hit;
  for (std::size_t qi = 0; qi < rankings.size(); ++qi) {
    int hit = n;
    for (int r = 0; r < n; ++r) {
      if (index.gallery_labels[static_cast<std::size_t>(rankings[qi][static_cast<std::size_t>(r)])] ==
          index.query_labels[qi]) {
        hit = r;
        break;
      }
    }
    first_hit.push_back(hit);
  }
  std::map<int, double> out;
  for (int k : ks) {
    if (first_hit.empty()) {
      out[k] = 0.0;
      continue;
    }
    const auto hits = std::count_if(first_hit.begin(), first_hit.end(),
                                    [k](int h) { return h < k; });
    out[k] = static_cast<double>(hits) / static_cast<double>(first_hit.size());
  }
  return out;
}

double mean_ap(const RetrievalIndex& index) {
  index.validate();
  const auto rankings = rank_all(index);
  if (rankings.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t qi = 0; qi < rankings.size(); ++qi) {
    int found = 0;
    double ap = 0.0;
    for (std::size_t r = 0; r < rankings[qi].size(); ++r) {
      if (index.gallery_labels[static_cast<std::size_t>(rankings[qi][r])] ==
          index.query_labels[qi]) {
        ++found;
        ap += static_cast<double>(found) / static_cast<double>(r + 1);
      }
    }
    if (found == 0) {
      throw std::invalid_argument("mean_ap: query " + std::to_string(qi) +
                                  " has no positive in the gallery");
    }
    total += ap / found;
  }
  return total / static_cast<double>(rankings.size());
}

nlohmann::json RetrievalReport::to_json() const {
  return {{"R1", r1}, {"R5", r5}, {"R10", r10}, {"mAP", map}};
}

RetrievalReport evaluate_retrieval(const RetrievalIndex& index) {
  const int n = static_cast<int>(index.gallery.rows());
  const int ks[] = {1, std::min(5, n), std::min(10, n)};
  const auto acc = topk_accuracy(index, ks);
  RetrievalReport report;
  report.r1 = acc.at(ks[0]);
  report.r5 = acc.at(ks[1]);
  report.r10 = acc.at(ks[2]);
  report.map = mean_ap(index);
  return report;
}

}  // namespace tpsearch
