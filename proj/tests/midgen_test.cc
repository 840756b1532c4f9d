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

#include "tpsearch/midgen.h"

#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "test_support.h"
#include "tpsearch/lexicon.h"
#include "tpsearch/textparse.h"

namespace tpsearch {
namespace {

using testing::brute_force_mid_contents;
using testing::effective_content;
using testing::make_phrase;

std::vector<AttributePhrase> PhrasesWithAdjectives(const std::vector<int>& counts) {
  static const std::vector<std::pair<std::string, AttributeItem>> kNouns = {
      {"shirt", AttributeItem::kUpperClothing},
      {"jeans", AttributeItem::kLowerClothing},
      {"hat", AttributeItem::kHeadItem},
      {"boots", AttributeItem::kFootItem}};
  std::vector<AttributePhrase> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out.push_back(make_phrase(kNouns[i].first, NounCategory::kWearing, kNouns[i].second,
                              counts[i]));
  }
  return out;
}

TEST(MidgenTest, TwoPhrasesOneAdjectiveEach) {
  const auto phrases = PhrasesWithAdjectives({1, 1});
  EXPECT_EQ(enumerate_mids(phrases, "x").size(), 7u);
}

TEST(MidgenTest, SinglePhraseWithoutAdjectivesHasNoVariants) {
  const auto phrases = PhrasesWithAdjectives({0});
  EXPECT_TRUE(enumerate_mids(phrases, "x").empty());
}

TEST(MidgenTest, ThreePhrasesMixedAdjectives) {
  const auto phrases = PhrasesWithAdjectives({1, 1, 0});
  EXPECT_EQ(enumerate_mids(phrases, "x").size(), 16u);
}

TEST(MidgenTest, EmptyPhraseListThrows) {
  EXPECT_THROW(enumerate_mids({}, "x"), std::invalid_argument);
}

TEST(MidgenTest, MatchesBruteForceOracleInBothModes) {
  for (MidMode mode : {MidMode::kAdjectiveAndPhrase, MidMode::kFullComponent}) {
    for (int n = 1; n <= 3; ++n) {
      std::vector<int> counts(static_cast<std::size_t>(n), 0);
      while (true) {
        const auto variants = enumerate_mids(PhrasesWithAdjectives(counts), "x", mode);
        std::set<std::vector<std::string>> seen;
        for (const auto& v : variants) {
          EXPECT_TRUE(seen.insert(effective_content(v, counts)).second) << "duplicate";
        }
        EXPECT_EQ(seen, brute_force_mid_contents(counts, mode));
        std::size_t pos = 0;
        while (pos < counts.size() && ++counts[pos] > 2) counts[pos++] = 0;
        if (pos == counts.size()) break;
      }
    }
  }
}

TEST(MidgenTest, VariantsAreStrictlyIncompleteAndNonEmpty) {
  const Lexicon lex = Lexicon::builtin();
  const std::string caption = "A man wears a red shirt and black shorts.";
  const auto phrases = parse_description(caption, lex);
  for (const auto& v : enumerate_mids(phrases, caption, MidMode::kAdjectiveAndPhrase, 4)) {
    EXPECT_EQ(v.source_caption_id, 4);
    EXPECT_NE(v.text, caption);
    bool any_reduced = false;
    bool any_kept = false;
    for (PhraseState s : v.kept) {
      any_reduced = any_reduced || s != PhraseState::kFull;
      any_kept = any_kept || s != PhraseState::kDropped;
    }
    EXPECT_TRUE(any_reduced);
    EXPECT_TRUE(any_kept);
  }
}

TEST(MidgenTest, ReparsedMidIsSubsetOfCaption) {
  const Lexicon lex = Lexicon::builtin();
  const std::string caption =
      "The woman is wearing a white blouse, blue jeans and carries a black backpack.";
  const auto phrases = parse_description(caption, lex);
  ASSERT_EQ(phrases.size(), 4u);
  for (const auto& v : enumerate_mids(phrases, caption)) {
    const auto back = parse_description(v.text, lex);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      if (v.kept[i] == PhraseState::kDropped) continue;
      ASSERT_LT(expected, back.size()) << v.text;
      // Gender nouns may be rendered as the subject; all others keep order.
      const auto& got = back[expected++];
      EXPECT_EQ(got.noun, phrases[i].noun) << v.text;
      if (v.kept[i] == PhraseState::kFull) {
        EXPECT_EQ(got.adjectives, phrases[i].adjectives) << v.text;
      } else {
        EXPECT_TRUE(got.adjectives.empty()) << v.text;
      }
    }
    EXPECT_EQ(expected, back.size()) << v.text;
  }
}

TEST(MidgenTest, OrderIsDeterministic) {
  const auto phrases = PhrasesWithAdjectives({2, 1, 0});
  EXPECT_EQ(enumerate_mids(phrases, "cap"), enumerate_mids(phrases, "cap"));
}

TEST(MidgenTest, SampleSemantics) {
  const auto variants = enumerate_mids(PhrasesWithAdjectives({1, 1}), "x");
  ASSERT_EQ(variants.size(), 7u);
  EXPECT_TRUE(sample_mids(variants, 0, 1).empty());
  const auto three = sample_mids(variants, 3, 1);
  ASSERT_EQ(three.size(), 3u);
  std::set<std::string> distinct;
  for (const auto& v : three) distinct.insert(v.text);
  EXPECT_EQ(distinct.size(), 3u);
  EXPECT_EQ(sample_mids(variants, 3, 1), three);
  const std::vector<MIDVariant> two(variants.begin(), variants.begin() + 2);
  const auto five = sample_mids(two, 5, 9);
  ASSERT_EQ(five.size(), 5u);
  for (const auto& v : five) EXPECT_TRUE(v == two[0] || v == two[1]);
  EXPECT_TRUE(sample_mids(std::vector<MIDVariant>{}, 3, 1).empty());
}

TEST(MidgenTest, FullComponentAllowsDanglingAdjectives) {
  const auto phrases = PhrasesWithAdjectives({1, 1});
  const auto full = enumerate_mids(phrases, "x", MidMode::kFullComponent);
  EXPECT_EQ(full.size(), 14u);  // 4 * 4 - 2
  bool saw_adjective_only = false;
  for (const auto& v : full) {
    for (PhraseState s : v.kept) saw_adjective_only |= s == PhraseState::kAdjectiveOnly;
  }
  EXPECT_TRUE(saw_adjective_only);
}

TEST(MidgenTest, DropOnePhrase) {
  const Lexicon lex = Lexicon::builtin();
  const std::string caption = "A man wears a red shirt and black shorts.";
  const auto phrases = parse_description(caption, lex);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::string dropped = drop_one_phrase(phrases, caption, seed);
    EXPECT_EQ(parse_description(dropped, lex).size(), 2u) << dropped;
  }
  const auto single = parse_description("a red shirt", lex);
  EXPECT_EQ(drop_one_phrase(single, "a red shirt", 1), "a red shirt");
}

TEST(MidgenTest, ModeKeys) {
  EXPECT_EQ(parse_mid_mode(mid_mode_key(MidMode::kFullComponent)), MidMode::kFullComponent);
  EXPECT_EQ(parse_mid_mode("adjective_and_phrase"), MidMode::kAdjectiveAndPhrase);
  EXPECT_THROW(parse_mid_mode("nope"), std::invalid_argument);
  EXPECT_EQ(state_key(PhraseState::kNounOnly), "noun_only");
}

TEST(MidgenTest, JsonShape) {
  const auto v = enumerate_mids(PhrasesWithAdjectives({1}), "x", MidMode::kAdjectiveAndPhrase, 2);
  ASSERT_EQ(v.size(), 1u);
  const auto j = mid_to_json(v[0]);
  EXPECT_EQ(j.at("caption_id"), 2);
  EXPECT_EQ(j.at("states"), nlohmann::json::array({"noun_only"}));
  EXPECT_TRUE(j.at("text").is_string());
}

}  // namespace
}  // namespace tpsearch
