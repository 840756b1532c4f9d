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

// Deterministic seed derivation shared by the generators and the trainer.

#ifndef TPSEARCH_SEEDS_H_
#define TPSEARCH_SEEDS_H_

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace tpsearch {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

// Independent stream seed for (base, tag, indices...).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::initializer_list<std::uint64_t> indices = {}) {
  std::uint64_t h = splitmix64(base ^ fnv1a64(tag));
  for (std::uint64_t i : indices) h = splitmix64(h ^ splitmix64(i + 0x51ull));
  return h;
}

}  // namespace tpsearch

#endif  // TPSEARCH_SEEDS_H_
