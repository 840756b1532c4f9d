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

#include "tpsearch/dapgen.h"

#include <unordered_set>

#include "tpsearch/caption_render.h"
#include "tpsearch/sampling.h"

namespace tpsearch {
namespace {

std::string noun_group(NounCategory category) {
  switch (category) {
    case NounCategory::kGender:
      return "noun/gender";
    case NounCategory::kWearing:
      return "noun/wearing";
    case NounCategory::kDecoration:
      return "noun/decoration";
  }
  return "noun/unknown";
}

std::string noun_template(NounCategory category, const std::string& filler) {
  switch (category) {
    case NounCategory::kGender:
      return "This person is a " + filler + ".";
    case NounCategory::kWearing:
      return "This person wears " + filler + ".";
    case NounCategory::kDecoration:
      return "This person has " + filler + ".";
  }
  return filler;
}

}  // namespace

std::string_view prompt_kind_key(PromptKind kind) {
  switch (kind) {
    case PromptKind::kNoun:
      return "noun";
    case PromptKind::kAdjective:
      return "adjective";
    case PromptKind::kPhrase:
      return "phrase";
  }
  return "unknown";
}

std::vector<Prompt> generate_prompts(std::span<const AttributePhrase> phrases,
                                     int caption_id) {
  std::vector<Prompt> out;
  std::unordered_set<std::string> seen;
  auto emit = [&](PromptKind kind, std::string group, std::string text) {
    if (!seen.insert(text).second) return;
    out.push_back({kind, std::move(group), std::move(text), caption_id});
  };
  for (const auto& p : phrases) {
    emit(PromptKind::kNoun, noun_group(p.noun_category),
         noun_template(p.noun_category, p.noun));
  }
  for (const auto& p : phrases) {
    if (p.adjectives.empty()) continue;
    emit(PromptKind::kAdjective, "adjective/" + std::string(item_key(p.attribute_item)),
         "The " + std::string(item_display_name(p.attribute_item)) +
             " of this person is " + join_adjectives(p.adjectives) + ".");
  }
  for (const auto& p : phrases) {
    PhraseParts parts{p.adjectives, p.noun, p.noun_category};
    emit(PromptKind::kPhrase, noun_group(p.noun_category),
         noun_template(p.noun_category, noun_phrase_text(parts, false)));
  }
  return out;
}

std::vector<Prompt> sample_prompts(std::span<const Prompt> prompts, int k_p,
                                   std::uint64_t seed) {
  return sample_or_resample(prompts, k_p, seed);
}

std::vector<std::string> prompt_vocabulary() {
  std::vector<std::string> words = {"this", "person", "is", "a", "wears", "has",
                                    "the",  "of",     "and"};
  for (AttributeItem item : kAllItems) {
    for (const auto& w : tokenize_words(item_display_name(item))) words.push_back(w);
  }
  return words;
}

nlohmann::json prompt_to_json(const Prompt& prompt) {
  return {{"caption_id", prompt.source_caption_id},
          {"kind", std::string(prompt_kind_key(prompt.kind))},
          {"group_key", prompt.group_key},
          {"text", prompt.text}};
}

}  // namespace tpsearch
