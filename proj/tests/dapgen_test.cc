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

#include <set>

#include <gtest/gtest.h>

#include "test_support.h"
#include "tpsearch/corpus.h"
#include "tpsearch/textparse.h"

namespace tpsearch {
namespace {

class DapgenTest : public ::testing::Test {
 protected:
  std::vector<Prompt> PromptsFor(const std::string& text) {
    return generate_prompts(parse_description(text, lex_), 3);
  }
  const Lexicon lex_ = Lexicon::builtin();
};

bool Contains(const std::vector<Prompt>& prompts, PromptKind kind, const std::string& group,
              const std::string& text) {
  for (const auto& p : prompts) {
    if (p.kind == kind && p.group_key == group && p.text == text) return true;
  }
  return false;
}

TEST_F(DapgenTest, ReferencePrompts) {
  const auto prompts = PromptsFor("A man wears a red shirt.");
  EXPECT_TRUE(Contains(prompts, PromptKind::kNoun, "noun/gender", "This person is a man."));
  EXPECT_TRUE(Contains(prompts, PromptKind::kNoun, "noun/wearing", "This person wears shirt."));
  EXPECT_TRUE(Contains(prompts, PromptKind::kAdjective, "adjective/upper_clothing",
                       "The upper clothing of this person is red."));
  EXPECT_TRUE(
      Contains(prompts, PromptKind::kPhrase, "noun/wearing", "This person wears red shirt."));
  // The gender phrase prompt duplicates its noun prompt and is dropped.
  EXPECT_EQ(prompts.size(), 4u);
  for (const auto& p : prompts) EXPECT_EQ(p.source_caption_id, 3);
}

TEST_F(DapgenTest, DecorationPredicateAndMultiAdjective) {
  const auto prompts = PromptsFor("She carries a black and white bag.");
  EXPECT_TRUE(Contains(prompts, PromptKind::kNoun, "noun/decoration", "This person has bag."));
  EXPECT_TRUE(Contains(prompts, PromptKind::kAdjective, "adjective/accessory",
                       "The accessory of this person is black and white."));
  EXPECT_TRUE(Contains(prompts, PromptKind::kPhrase, "noun/decoration",
                       "This person has black and white bag."));
}

TEST_F(DapgenTest, OrderIsNounsThenAdjectivesThenPhrases) {
  const auto prompts = PromptsFor("A woman in a red shirt and blue jeans.");
  int stage = 0;
  for (const auto& p : prompts) {
    const int s = p.kind == PromptKind::kNoun ? 0 : p.kind == PromptKind::kAdjective ? 1 : 2;
    EXPECT_GE(s, stage);
    stage = s;
  }
}

TEST_F(DapgenTest, EmptyPhrasesGiveNoPrompts) {
  EXPECT_TRUE(generate_prompts({}).empty());
}

TEST_F(DapgenTest, SampleSemantics) {
  const auto prompts = PromptsFor("A man wears a red shirt and black shorts and has a bag.");
  ASSERT_GE(prompts.size(), 8u);
  EXPECT_TRUE(sample_prompts(prompts, 0, 1).empty());
  const auto three = sample_prompts(prompts, 3, 1);
  std::set<std::string> distinct;
  for (const auto& p : three) distinct.insert(p.text);
  EXPECT_EQ(distinct.size(), 3u);
  const std::vector<Prompt> four(prompts.begin(), prompts.begin() + 4);
  const auto six = sample_prompts(four, 6, 2);
  EXPECT_EQ(six.size(), 6u);
  std::set<std::string> pool;
  for (const auto& p : four) pool.insert(p.text);
  for (const auto& p : six) EXPECT_TRUE(pool.contains(p.text));
  EXPECT_EQ(sample_prompts(four, 6, 2), six);
}

TEST_F(DapgenTest, EveryPromptMatchesExactlyOneTemplate) {
  const Dataset ds = generate_dataset(CorpusConfig{}, 21);
  for (const auto& cap : ds.captions) {
    for (const auto& p : generate_prompts(cap.phrases, cap.caption_id)) {
      const auto groups = testing::matching_prompt_templates(p.text, lex_);
      ASSERT_EQ(groups.size(), 1u) << p.text;
      EXPECT_EQ(groups[0], p.group_key) << p.text;
    }
  }
}

TEST_F(DapgenTest, PromptsOnlyAssertCaptionAttributes) {
  const Dataset ds = generate_dataset(CorpusConfig{}, 22);
  for (const auto& cap : ds.captions) {
    std::set<std::string> caption_words;
    for (const auto& p : cap.phrases) {
      caption_words.insert(p.noun);
      caption_words.insert(p.adjectives.begin(), p.adjectives.end());
    }
    for (const auto& p : generate_prompts(cap.phrases)) {
      for (const auto& w : tokenize_words(p.text)) {
        if (lex_.is_noun(w) || lex_.is_adjective(w)) {
          EXPECT_TRUE(caption_words.contains(w)) << p.text << " vs " << cap.text;
        }
      }
    }
  }
}

TEST_F(DapgenTest, JsonShape) {
  const auto prompts = PromptsFor("a man");
  ASSERT_EQ(prompts.size(), 1u);
  const auto j = prompt_to_json(prompts[0]);
  EXPECT_EQ(j.at("kind"), "noun");
  EXPECT_EQ(j.at("group_key"), "noun/gender");
  EXPECT_EQ(j.at("caption_id"), 3);
  EXPECT_EQ(j.at("text"), "This person is a man.");
}

}  // namespace
}  // namespace tpsearch
