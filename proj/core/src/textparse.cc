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

#include "tpsearch/textparse.h"

#include <algorithm>
#include <cctype>

namespace tpsearch {

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<AttributePhrase> parse_description(std::string_view text,
                                               const Lexicon& lexicon) {
  const std::vector<std::string> tokens = tokenize_words(text);
  std::vector<AttributePhrase> phrases;
  int claimed = 0;  // tokens before this index belong to an earlier phrase
  for (int i = 0; i < static_cast<int>(tokens.size()); ++i) {
    const auto hit = lexicon.find_noun(tokens[i]);
    if (!hit) continue;
    AttributePhrase phrase;
    phrase.noun = tokens[i];
    phrase.noun_category = hit->first;
    phrase.attribute_item = hit->second;
    phrase.span_end = i + 1;
    int start = i;
    int j = i - 1;
    while (j >= claimed) {
      if (lexicon.is_adjective(tokens[j])) {
        phrase.adjectives.push_back(tokens[j]);
        start = j;
        --j;
      } else if (tokens[j] == "and" && !phrase.adjectives.empty() && j - 1 >= claimed &&
                 lexicon.is_adjective(tokens[j - 1])) {
        --j;
      } else {
        break;
      }
    }
    std::reverse(phrase.adjectives.begin(), phrase.adjectives.end());
    phrase.span_begin = start;
    claimed = i + 1;
    phrases.push_back(std::move(phrase));
  }
  return phrases;
}

std::pair<NounCategory, AttributeItem> categorize_noun(std::string_view noun,
                                                       const Lexicon& lexicon) {
  const auto hit = lexicon.find_noun(noun);
  if (!hit) throw LookupError(std::string(noun));
  return *hit;
}

std::string phrase_surface(const std::vector<std::string>& tokens,
                           const AttributePhrase& phrase) {
  std::string out;
  for (int i = phrase.span_begin; i < phrase.span_end; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[static_cast<std::size_t>(i)];
  }
  return out;
}

nlohmann::json phrase_to_json(const AttributePhrase& phrase) {
  return {
      {"adjectives", phrase.adjectives},
      {"noun", phrase.noun},
      {"noun_category", std::string(category_key(phrase.noun_category))},
      {"attribute_item", std::string(item_key(phrase.attribute_item))},
      {"span", {phrase.span_begin, phrase.span_end}},
  };
}

}  // namespace tpsearch
