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

#ifndef TPSEARCH_SAMPLING_H_
#define TPSEARCH_SAMPLING_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tpsearch/seeds.h"

namespace tpsearch {

// Draws k items: distinct ones when the pool is large enough, otherwise
// uniformly with replacement so callers always get exactly k (unless the
// pool is empty). Deterministic for a fixed seed.
template <typename T>
std::vector<T> sample_or_resample(std::span<const T> pool, int k, std::uint64_t seed) {
  std::vector<T> out;
  if (k <= 0 || pool.empty()) return out;
  std::mt19937_64 rng(splitmix64(seed));
  const auto n = pool.size();
  const auto want = static_cast<std::size_t>(k);
  if (n >= want) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < want; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
      std::swap(idx[i], idx[j]);
      out.push_back(pool[idx[i]]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < want; ++i) out.push_back(pool[pick(rng)]);
  }
  return out;
}

}  // namespace tpsearch

#endif  // TPSEARCH_SAMPLING_H_
