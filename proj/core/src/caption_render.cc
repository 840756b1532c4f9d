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

#include "tpsearch/caption_render.h"

#include <array>
#include <stdexcept>

namespace tpsearch {
namespace {

struct Skeleton {
  // {S} subject noun, {W} wearing list, {D} decoration list
  std::string_view both;
  std::string_view wear_only;
  std::string_view carry_only;
};

constexpr std::array<Skeleton, kCaptionTemplateCount> kSkeletons = {{
    {"A {S} wears {W} and carries {D}.", "A {S} wears {W}.", "A {S} carries {D}."},
    {"The {S} is wearing {W} and is carrying {D}.", "The {S} is wearing {W}.",
     "The {S} is carrying {D}."},
    {"This {S} has on {W} and holds {D}.", "This {S} has on {W}.", "This {S} holds {D}."},
    {"A {S} in {W} with {D}.", "A {S} in {W}.", "A {S} with {D}."},
    {"The {S} is dressed in {W} and has {D}.", "The {S} is dressed in {W}.",
     "The {S} has {D}."},
    {"We see a {S} wearing {W} and toting {D}.", "We see a {S} wearing {W}.",
     "We see a {S} toting {D}."},
}};

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += (i + 1 == items.size()) ? " and " : ", ";
    out += items[i];
  }
  return out;
}

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

}  // namespace

std::string join_adjectives(const std::vector<std::string>& adjectives) {
  std::string out;
  for (std::size_t i = 0; i < adjectives.size(); ++i) {
    if (i > 0) out += (i + 1 == adjectives.size()) ? " and " : " ";
    out += adjectives[i];
  }
  return out;
}

bool is_plural_noun(std::string_view noun) {
  return noun.size() > 1 && noun.back() == 's' && noun[noun.size() - 2] != 's';
}

std::string noun_phrase_text(const PhraseParts& part, bool with_article) {
  std::string body = join_adjectives(part.adjectives);
  if (!part.noun.empty()) {
    if (!body.empty()) body.push_back(' ');
    body += part.noun;
  }
  if (!with_article || body.empty()) return body;
  if (!part.noun.empty() && is_plural_noun(part.noun)) return body;
  const char first = body.front();
  const bool vowel = first == 'a' || first == 'e' || first == 'i' || first == 'o' ||
                     first == 'u';
  return (vowel ? "an " : "a ") + body;
}

std::string render_sentence(const std::vector<PhraseParts>& parts, int template_index) {
  std::string subject = "person";
  bool have_subject = false;
  std::vector<std::string> wearing;
  std::vector<std::string> carrying;
  for (const PhraseParts& p : parts) {
    if (p.category == NounCategory::kGender && !have_subject && !p.noun.empty() &&
        p.adjectives.empty()) {
      subject = p.noun;
      have_subject = true;
    } else if (p.category == NounCategory::kDecoration) {
      carrying.push_back(noun_phrase_text(p, true));
    } else {
      wearing.push_back(noun_phrase_text(p, true));
    }
  }
  if (!have_subject && wearing.empty() && carrying.empty()) {
    throw std::invalid_argument("render_sentence: nothing to render");
  }
  const int idx = ((template_index % kCaptionTemplateCount) + kCaptionTemplateCount) %
                  kCaptionTemplateCount;
  const Skeleton& sk = kSkeletons[static_cast<std::size_t>(idx)];
  std::string text;
  if (!wearing.empty() && !carrying.empty()) {
    text = std::string(sk.both);
  } else if (!carrying.empty()) {
    text = std::string(sk.carry_only);
  } else if (!wearing.empty()) {
    text = std::string(sk.wear_only);
  } else {
    // Subject only, e.g. a MID that kept nothing but the gender noun.
    return "A " + subject + ".";
  }
  replace_all(text, "{S}", subject);
  replace_all(text, "{W}", join_list(wearing));
  replace_all(text, "{D}", join_list(carrying));
  return text;
}

std::vector<std::string> caption_template_vocabulary() {
  return {"a",    "an",     "and",   "the",  "this",    "person", "wears",
          "carries", "is",  "wearing", "carrying", "has", "on",   "holds",
          "in",   "with",   "dressed", "we", "see",     "toting"};
}

}  // namespace tpsearch
