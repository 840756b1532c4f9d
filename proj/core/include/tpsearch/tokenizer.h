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

#ifndef TPSEARCH_TOKENIZER_H_
#define TPSEARCH_TOKENIZER_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tpsearch/lexicon.h"

namespace tpsearch {

// Word-level tokenizer sharing the parser's normalization (lowercase,
// punctuation stripped). Ids 0..3 are reserved for PAD, SOT, EOT and UNK.
class Tokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kSot = 1;
  static constexpr int kEot = 2;
  static constexpr int kUnk = 3;
  static constexpr int kFirstWordId = 4;

  Tokenizer() = default;
  // Throws std::invalid_argument when max_len < 3.
  Tokenizer(std::vector<std::string> words, int max_len);

  // Lexicon words plus everything caption templates and prompts can emit.
  static Tokenizer for_lexicon(const Lexicon& lexicon, int max_len);
  // Vocabulary file: one word per line, specials implicit.
  static Tokenizer load(const std::filesystem::path& path, int max_len);
  void save(const std::filesystem::path& path) const;

  // SOT w1 .. wn EOT PAD.. with exactly max_len ids; words beyond
  // max_len - 2 are truncated. Unknown words map to UNK.
  std::vector<int> encode(std::string_view text) const;
  // Words for non-special ids, space-joined.
  std::string decode(std::span<const int> ids) const;

  int id(std::string_view word) const;
  int vocab_size() const { return kFirstWordId + static_cast<int>(words_.size()); }
  int max_len() const { return max_len_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
  int max_len_ = 32;
};

// Number of word tokens (excluding specials and padding) in an encoded
// sequence.
int count_word_tokens(std::span<const int> ids);

}  // namespace tpsearch

#endif  // TPSEARCH_TOKENIZER_H_
