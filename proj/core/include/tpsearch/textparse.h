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

// Lexicon-driven extraction of attribute phrases ("black and white shirt")
// from free caption text.

#ifndef TPSEARCH_TEXTPARSE_H_
#define TPSEARCH_TEXTPARSE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/lexicon.h"

namespace tpsearch {

struct AttributePhrase {
  std::vector<std::string> adjectives;
  std::string noun;
  NounCategory noun_category = NounCategory::kWearing;
  AttributeItem attribute_item = AttributeItem::kUpperClothing;
  // Half-open token range [span_begin, span_end) into tokenize_words(text).
  int span_begin = 0;
  int span_end = 0;

  friend bool operator==(const AttributePhrase&, const AttributePhrase&) = default;
};

// Lowercases, turns every non-alphanumeric byte into a separator and splits.
std::vector<std::string> tokenize_words(std::string_view text);

// Phrases in left-to-right order. A phrase is a maximal run of known
// adjectives (optionally joined by "and") directly before a known noun.
// Never throws; text without lexicon hits yields an empty list.
std::vector<AttributePhrase> parse_description(std::string_view text,
                                               const Lexicon& lexicon);

// Throws LookupError for nouns outside the lexicon.
std::pair<NounCategory, AttributeItem> categorize_noun(std::string_view noun,
                                                       const Lexicon& lexicon);

// Space-joined tokens covered by the phrase span.
std::string phrase_surface(const std::vector<std::string>& tokens,
                           const AttributePhrase& phrase);

nlohmann::json phrase_to_json(const AttributePhrase& phrase);

}  // namespace tpsearch

#endif  // TPSEARCH_TEXTPARSE_H_
