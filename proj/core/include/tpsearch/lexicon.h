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

// Attribute vocabulary: which nouns belong to which attribute item, which
// adjectives may modify them, and how each noun is phrased in prompts.

#ifndef TPSEARCH_LEXICON_H_
#define TPSEARCH_LEXICON_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace tpsearch {

enum class AttributeItem {
  kUpperClothing,
  kLowerClothing,
  kHeadItem,
  kFootItem,
  kAccessory,
  kGender,
};

inline constexpr std::array<AttributeItem, 6> kAllItems = {
    AttributeItem::kUpperClothing, AttributeItem::kLowerClothing,
    AttributeItem::kHeadItem,      AttributeItem::kFootItem,
    AttributeItem::kAccessory,     AttributeItem::kGender,
};

enum class NounCategory { kGender, kWearing, kDecoration };

// "upper_clothing", ..., "gender"
std::string_view item_key(AttributeItem item);
// "upper clothing", ..., "gender"
std::string_view item_display_name(AttributeItem item);
std::optional<AttributeItem> parse_item_key(std::string_view key);

// "gender_noun", "wearing_noun", "decoration_noun"
std::string_view category_key(NounCategory category);
std::optional<NounCategory> parse_category_key(std::string_view key);
NounCategory default_category(AttributeItem item);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
 public:
  explicit LookupError(std::string token)
      : std::out_of_range("unknown token: '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

struct ItemLexicon {
  std::vector<std::string> nouns;
  std::vector<std::string> adjectives;
  NounCategory category = NounCategory::kWearing;
};

class Lexicon {
 public:
  Lexicon() = default;

  // JSON map item -> {"nouns": [...], "adjectives": [...], "category"?}.
  // Throws ConfigError on unknown items, a noun listed under two items, or a
  // word that is both noun and adjective.
  static Lexicon from_json(const nlohmann::json& j);
  static Lexicon load(const std::filesystem::path& path);
  // The vocabulary used by the synthetic corpus when no file is given.
  static Lexicon builtin();

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  bool has_item(AttributeItem item) const { return items_.contains(item); }
  const ItemLexicon& item(AttributeItem item) const;

  bool is_noun(std::string_view word) const;
  bool is_adjective(std::string_view word) const;
  std::optional<std::pair<NounCategory, AttributeItem>> find_noun(
      std::string_view noun) const;

  // Every noun and adjective, sorted and unique.
  std::vector<std::string> words() const;

 private:
  std::map<AttributeItem, ItemLexicon> items_;
  std::unordered_map<std::string, std::pair<NounCategory, AttributeItem>> nouns_;
  std::unordered_set<std::string> adjectives_;
};

}  // namespace tpsearch

#endif  // TPSEARCH_LEXICON_H_
