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

#include "tpsearch/tokenizer.h"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "tpsearch/corpus.h"

namespace tpsearch {
namespace {

TEST(TokenizerTest, EncodeLayout) {
  const Tokenizer tok({"man", "red", "shirt"}, 8);
  const auto ids = tok.encode("Red shirt!");
  ASSERT_EQ(ids.size(), 8u);
  EXPECT_EQ(ids[0], Tokenizer::kSot);
  EXPECT_EQ(ids[1], tok.id("red"));
  EXPECT_EQ(ids[2], tok.id("shirt"));
  EXPECT_EQ(ids[3], Tokenizer::kEot);
  for (std::size_t i = 4; i < ids.size(); ++i) EXPECT_EQ(ids[i], Tokenizer::kPad);
  EXPECT_EQ(count_word_tokens(ids), 2);
}

TEST(TokenizerTest, UnknownWordsMapToUnk) {
  const Tokenizer tok({"man"}, 6);
  const auto ids = tok.encode("man spaceship");
  EXPECT_EQ(ids[2], Tokenizer::kUnk);
  EXPECT_EQ(tok.id("spaceship"), Tokenizer::kUnk);
}

TEST(TokenizerTest, RoundTripsKnownWords) {
  const Tokenizer tok = Tokenizer::for_lexicon(Lexicon::builtin(), 32);
  const Dataset ds = generate_dataset(CorpusConfig{}, 5);
  for (const auto& cap : ds.captions) {
    const auto ids = tok.encode(cap.text);
    std::string expected;
    for (const auto& w : tokenize_words(cap.text)) expected += (expected.empty() ? "" : " ") + w;
    EXPECT_EQ(tok.decode(ids), expected);
    for (int id : ids) EXPECT_NE(id, Tokenizer::kUnk) << cap.text;
  }
}

TEST(TokenizerTest, LongTextIsTruncated) {
  const Tokenizer tok({"red"}, 32);
  std::string text;
  for (int i = 0; i < 100; ++i) text += "red ";
  const auto ids = tok.encode(text);
  ASSERT_EQ(ids.size(), 32u);
  EXPECT_EQ(count_word_tokens(ids), 30);
  EXPECT_EQ(ids.front(), Tokenizer::kSot);
  EXPECT_EQ(ids.back(), Tokenizer::kEot);
}

TEST(TokenizerTest, RejectsTinyMaxLen) {
  EXPECT_THROW(Tokenizer({"a"}, 2), std::invalid_argument);
}

TEST(TokenizerTest, VocabularyFileRoundTrip) {
  const Tokenizer tok = Tokenizer::for_lexicon(Lexicon::builtin(), 16);
  const auto path = std::filesystem::temp_directory_path() / "tpsearch_vocab_test.txt";
  tok.save(path);
  const Tokenizer back = Tokenizer::load(path, 16);
  EXPECT_EQ(back.words(), tok.words());
  EXPECT_EQ(back.vocab_size(), tok.vocab_size());
  EXPECT_EQ(back.encode("a man in red"), tok.encode("a man in red"));
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace tpsearch
