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

#include <fstream>
#include <set>
#include <stdexcept>

#include "tpsearch/caption_render.h"
#include "tpsearch/dapgen.h"
#include "tpsearch/textparse.h"

namespace tpsearch {

Tokenizer::Tokenizer(std::vector<std::string> words, int max_len)
    : words_(std::move(words)), max_len_(max_len) {
  if (max_len_ < 3) throw std::invalid_argument("Tokenizer: max_len must be >= 3");
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (!ids_.emplace(words_[i], kFirstWordId + static_cast<int>(i)).second) {
      throw std::invalid_argument("Tokenizer: duplicate word '" + words_[i] + "'");
    }
  }
}

Tokenizer Tokenizer::for_lexicon(const Lexicon& lexicon, int max_len) {
  std::set<std::string> all;
  for (const auto& w : lexicon.words()) all.insert(w);
  for (const auto& w : caption_template_vocabulary()) all.insert(w);
  for (const auto& w : prompt_vocabulary()) all.insert(w);
  return Tokenizer({all.begin(), all.end()}, max_len);
}

Tokenizer Tokenizer::load(const std::filesystem::path& path, int max_len) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Tokenizer: cannot open " + path.string());
  std::vector<std::string> words;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) words.push_back(line);
  }
  return Tokenizer(std::move(words), max_len);
}

void Tokenizer::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Tokenizer: cannot write " + path.string());
  for (const auto& w : words_) out << w << '\n';
}

int Tokenizer::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<int> Tokenizer::encode(std::string_view text) const {
  const auto tokens = tokenize_words(text);
  const std::size_t keep = std::min(tokens.size(), static_cast<std::size_t>(max_len_ - 2));
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(max_len_));
  ids.push_back(kSot);
  for (std::size_t i = 0; i < keep; ++i) ids.push_back(id(tokens[i]));
  ids.push_back(kEot);
  ids.resize(static_cast<std::size_t>(max_len_), kPad);
  return ids;
}

std::string Tokenizer::decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) {
    if (id < kFirstWordId && id != kUnk) continue;
    if (!out.empty()) out.push_back(' ');
    if (id == kUnk) {
      out += "<unk>";
    } else if (id - kFirstWordId < static_cast<int>(words_.size())) {
      out += words_[static_cast<std::size_t>(id - kFirstWordId)];
    }
  }
  return out;
}

int count_word_tokens(std::span<const int> ids) {
  int n = 0;
  for (int id : ids) {
    if (id == Tokenizer::kUnk || id >= Tokenizer::kFirstWordId) ++n;
  }
  return n;
}

}  // namespace tpsearch
