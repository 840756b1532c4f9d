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

// Sentence templates shared by the corpus generator and the MID rewriter.
// Every template mentions each part exactly once, so parsing a rendered
// sentence recovers the parts in mention order.

#ifndef TPSEARCH_CAPTION_RENDER_H_
#define TPSEARCH_CAPTION_RENDER_H_

#include <string>
#include <string_view>
#include <vector>

#include "tpsearch/lexicon.h"

namespace tpsearch {

inline constexpr int kCaptionTemplateCount = 6;

// One mentionable attribute. An empty noun renders the adjectives alone
// (used only by the full-component MID ablation).
struct PhraseParts {
  std::vector<std::string> adjectives;
  std::string noun;
  NounCategory category = NounCategory::kWearing;
};

// "black and white" / "red"
std::string join_adjectives(const std::vector<std::string>& adjectives);

// Nouns ending in a single "s" (shorts, shoes) take no article.
bool is_plural_noun(std::string_view noun);

// "a red shirt", "an orange hat", "black shorts"
std::string noun_phrase_text(const PhraseParts& part, bool with_article);

// The first gender part becomes the subject ("A man ..."); without one the
// subject is "person". Wearing parts follow the wear verb and decoration
// parts the carry verb. Parts are mentioned in their input order within
// each group. Throws std::invalid_argument when nothing can be rendered.
std::string render_sentence(const std::vector<PhraseParts>& parts, int template_index);

// Words the templates can emit besides lexicon words.
std::vector<std::string> caption_template_vocabulary();

}  // namespace tpsearch

#endif  // TPSEARCH_CAPTION_RENDER_H_
