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

// Single-attribute prompt sentences built from a caption's phrases. Prompts
// are compared only within the same group_key.

#ifndef TPSEARCH_DAPGEN_H_
#define TPSEARCH_DAPGEN_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/textparse.h"

namespace tpsearch {

enum class PromptKind { kNoun, kAdjective, kPhrase };

std::string_view prompt_kind_key(PromptKind kind);

struct Prompt {
  PromptKind kind = PromptKind::kNoun;
  // "noun/gender", "noun/wearing", "noun/decoration" or "adjective/<item>".
  std::string group_key;
  std::string text;
  int source_caption_id = -1;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

// Noun prompts (one per phrase), then adjective prompts (phrases with
// adjectives), then phrase prompts. Prompts whose text repeats an earlier
// one are dropped, so adjective-free phrases yield only their noun prompt.
std::vector<Prompt> generate_prompts(std::span<const AttributePhrase> phrases,
                                     int caption_id = -1);

// Same distinct-then-resample semantics as sample_mids.
std::vector<Prompt> sample_prompts(std::span<const Prompt> prompts, int k_p,
                                   std::uint64_t seed);

// Words prompts can contain besides lexicon words.
std::vector<std::string> prompt_vocabulary();

nlohmann::json prompt_to_json(const Prompt& prompt);

}  // namespace tpsearch

#endif  // TPSEARCH_DAPGEN_H_
