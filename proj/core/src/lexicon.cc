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

#include "tpsearch/lexicon.h"

#include <algorithm>
#include <fstream>
#include <set>

namespace tpsearch {
namespace {

struct ItemNames {
  AttributeItem item;
  std::string_view key;
  std::string_view display;
};

constexpr std::array<ItemNames, 6> kItemNames = {{
    {AttributeItem::kUpperClothing, "upper_clothing", "upper clothing"},
    {AttributeItem::kLowerClothing, "lower_clothing", "lower clothing"},
    {AttributeItem::kHeadItem, "head_item", "head item"},
    {AttributeItem::kFootItem, "foot_item", "foot item"},
    {AttributeItem::kAccessory, "accessory", "accessory"},
    {AttributeItem::kGender, "gender", "gender"},
}};

constexpr std::string_view kBuiltinLexicon = R"json({
  "gender": {
    "nouns": ["man", "woman", "boy", "girl"],
    "adjectives": []
  },
  "upper_clothing": {
    "nouns": ["shirt", "jacket", "coat", "sweater", "blouse", "hoodie", "vest"],
    "adjectives": ["red", "blue", "black", "white", "green", "yellow", "gray",
                   "pink", "purple", "brown", "orange", "striped", "plaid",
                   "long", "short", "dark", "light"]
  },
  "lower_clothing": {
    "nouns": ["shorts", "pants", "jeans", "skirt", "trousers", "leggings"],
    "adjectives": ["red", "blue", "black", "white", "green", "yellow", "gray",
                   "pink", "purple", "brown", "orange", "striped", "plaid",
                   "long", "short", "dark", "light", "tight", "loose"]
  },
  "head_item": {
    "nouns": ["hat", "cap", "helmet", "scarf", "beanie"],
    "adjectives": ["red", "blue", "black", "white", "green", "yellow", "gray",
                   "pink", "purple", "brown", "orange", "round", "knitted"]
  },
  "foot_item": {
    "nouns": ["shoes", "boots", "sneakers", "sandals", "slippers"],
    "adjectives": ["red", "blue", "black", "white", "green", "yellow", "gray",
                   "pink", "purple", "brown", "orange", "leather", "flat"]
  },
  "accessory": {
    "nouns": ["backpack", "bag", "umbrella", "handbag", "suitcase", "phone"],
    "adjectives": ["red", "blue", "black", "white", "green", "yellow", "gray",
                   "pink", "purple", "brown", "orange", "large", "small",
                   "squared"]
  }
})json";

}  // namespace

std::string_view item_key(AttributeItem item) {
  for (const auto& n : kItemNames) {
    if (n.item == item) return n.key;
  }
  return "unknown";
}

std::string_view item_display_name(AttributeItem item) {
  for (const auto& n : kItemNames) {
    if (n.item == item) return n.display;
  }
  return "unknown";
}

std::optional<AttributeItem> parse_item_key(std::string_view key) {
  for (const auto& n : kItemNames) {
    if (n.key == key) return n.item;
  }
  return std::nullopt;
}

std::string_view category_key(NounCategory category) {
  switch (category) {
    case NounCategory::kGender:
      return "gender_noun";
    case NounCategory::kWearing:
      return "wearing_noun";
    case NounCategory::kDecoration:
      return "decoration_noun";
  }
  return "unknown";
}

std::optional<NounCategory> parse_category_key(std::string_view key) {
  if (key == "gender_noun" || key == "gender") return NounCategory::kGender;
  if (key == "wearing_noun" || key == "wearing") return NounCategory::kWearing;
  if (key == "decoration_noun" || key == "decoration") return NounCategory::kDecoration;
  return std::nullopt;
}

NounCategory default_category(AttributeItem item) {
  switch (item) {
    case AttributeItem::kGender:
      return NounCategory::kGender;
    case AttributeItem::kAccessory:
      return NounCategory::kDecoration;
    default:
      return NounCategory::kWearing;
  }
}

Lexicon Lexicon::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("lexicon: expected a JSON object");
  Lexicon lex;
  for (const auto& [key, body] : j.items()) {
    const auto item = parse_item_key(key);
    if (!item) throw ConfigError("lexicon: unknown attribute item '" + key + "'");
    ItemLexicon entry;
    entry.category = default_category(*item);
    if (body.contains("category")) {
      const auto cat = parse_category_key(body.at("category").get<std::string>());
      if (!cat) throw ConfigError("lexicon: bad category for item '" + key + "'");
      entry.category = *cat;
    }
    entry.nouns = body.value("nouns", std::vector<std::string>{});
    entry.adjectives = body.value("adjectives", std::vector<std::string>{});
    if (entry.nouns.empty()) {
      throw ConfigError("lexicon: item '" + key + "' has no nouns");
    }
    for (const auto& noun : entry.nouns) {
      if (!lex.nouns_.emplace(noun, std::make_pair(entry.category, *item)).second) {
        throw ConfigError("lexicon: noun '" + noun + "' listed under two items");
      }
    }
    for (const auto& adj : entry.adjectives) lex.adjectives_.insert(adj);
    lex.items_.emplace(*item, std::move(entry));
  }
  for (const auto& adj : lex.adjectives_) {
    if (lex.nouns_.contains(adj)) {
      throw ConfigError("lexicon: '" + adj + "' is both a noun and an adjective");
    }
  }
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("lexicon: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("lexicon: " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

Lexicon Lexicon::builtin() { return from_json(nlohmann::json::parse(kBuiltinLexicon)); }

nlohmann::json Lexicon::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [item, entry] : items_) {
    j[std::string(item_key(item))] = {
        {"nouns", entry.nouns},
        {"adjectives", entry.adjectives},
        {"category", std::string(category_key(entry.category))},
    };
  }
  return j;
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("lexicon: cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

const ItemLexicon& Lexicon::item(AttributeItem item) const {
  auto it = items_.find(item);
  if (it == items_.end()) {
    throw ConfigError("lexicon: missing attribute item '" +
                      std::string(item_key(item)) + "'");
  }
  return it->second;
}

bool Lexicon::is_noun(std::string_view word) const {
  return nouns_.contains(std::string(word));
}

bool Lexicon::is_adjective(std::string_view word) const {
  return adjectives_.contains(std::string(word));
}

std::optional<std::pair<NounCategory, AttributeItem>> Lexicon::find_noun(
    std::string_view noun) const {
  auto it = nouns_.find(std::string(noun));
  if (it == nouns_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Lexicon::words() const {
  std::set<std::string> all(adjectives_.begin(), adjectives_.end());
  for (const auto& [noun, _] : nouns_) all.insert(noun);
  return {all.begin(), all.end()};
}

}  // namespace tpsearch
