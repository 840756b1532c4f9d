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

#include "tpsearch/corpus.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "tpsearch/textparse.h"

namespace tpsearch {
namespace {

Identity MakeIdentity(int id, const std::string& shirt_colour) {
  Identity x;
  x.id = id;
  x.attributes = {{AttributeItem::kGender, "man", {}},
                  {AttributeItem::kUpperClothing, "shirt", {shirt_colour}},
                  {AttributeItem::kLowerClothing, "shorts", {"black"}}};
  return x;
}

double FlatCosine(const ag::Matrix& a, const ag::Matrix& b) {
  return (a.array() * b.array()).sum() / (a.norm() * b.norm());
}

TEST(CorpusTest, CountsMatchConfig) {
  CorpusConfig cfg;
  const Dataset ds = generate_dataset(cfg, 7);
  EXPECT_EQ(ds.identities.size(), 50u);
  EXPECT_EQ(ds.images.size(), 200u);
  EXPECT_EQ(ds.captions.size(), 400u);
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    EXPECT_EQ(ds.images[i].image_id, static_cast<int>(i));
    EXPECT_EQ(ds.images[i].patch_grid.rows(), 48);
    EXPECT_EQ(ds.images[i].patch_grid.cols(), 32);
    EXPECT_TRUE(ds.images[i].patch_grid.allFinite());
  }
}

TEST(CorpusTest, IdentityInvariants) {
  const Dataset ds = generate_dataset(CorpusConfig{}, 7);
  for (const Identity& ident : ds.identities) {
    std::set<AttributeItem> items;
    int non_gender = 0;
    for (const auto& a : ident.attributes) {
      EXPECT_TRUE(items.insert(a.item).second) << "duplicate item";
      EXPECT_LE(a.adjectives.size(), 2u);
      EXPECT_EQ(std::set<std::string>(a.adjectives.begin(), a.adjectives.end()).size(),
                a.adjectives.size());
      const auto& lex = ds.lexicon.item(a.item);
      EXPECT_NE(std::find(lex.nouns.begin(), lex.nouns.end(), a.noun), lex.nouns.end());
      for (const auto& adj : a.adjectives) {
        EXPECT_NE(std::find(lex.adjectives.begin(), lex.adjectives.end(), adj),
                  lex.adjectives.end());
      }
      non_gender += a.item == AttributeItem::kGender ? 0 : 1;
    }
    EXPECT_NE(ident.find(AttributeItem::kGender), nullptr);
    EXPECT_GE(non_gender, 3);
    EXPECT_LE(non_gender, 5);
  }
}

TEST(CorpusTest, GenerationIsByteIdentical) {
  const CorpusConfig cfg;
  EXPECT_EQ(captions_jsonl(generate_dataset(cfg, 7)), captions_jsonl(generate_dataset(cfg, 7)));
  EXPECT_NE(captions_jsonl(generate_dataset(cfg, 7)), captions_jsonl(generate_dataset(cfg, 8)));
  const Dataset a = generate_dataset(cfg, 7);
  const Dataset b = generate_dataset(cfg, 7);
  for (std::size_t i = 0; i < a.images.size(); ++i) {
    EXPECT_TRUE(a.images[i].patch_grid == b.images[i].patch_grid);
  }
}

TEST(CorpusTest, CaptionsMentionAtLeastTwoOwnPhrases) {
  const Dataset ds = generate_dataset(CorpusConfig{}, 7);
  for (const auto& cap : ds.captions) {
    EXPECT_FALSE(cap.text.empty());
    EXPECT_GE(cap.phrases.size(), 2u) << cap.text;
    const Identity& ident = ds.identities[static_cast<std::size_t>(cap.identity_id)];
    for (const auto& p : cap.phrases) {
      const AttributeValue* v = ident.find(p.attribute_item);
      ASSERT_NE(v, nullptr);
      EXPECT_EQ(v->noun, p.noun);
    }
  }
}

TEST(CorpusTest, DistinctAttributesShareNoPhrase) {
  CorpusConfig cfg;
  cfg.n_identities = 2;
  cfg.distinct_attributes = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset ds = generate_dataset(cfg, seed);
    auto phrase_set = [&](int identity) {
      std::set<std::pair<std::string, std::vector<std::string>>> out;
      for (const auto& cap : ds.captions) {
        if (cap.identity_id != identity) continue;
        for (const auto& p : parse_description(cap.text, ds.lexicon)) {
          out.insert({p.noun, p.adjectives});
        }
      }
      return out;
    };
    const auto a = phrase_set(0);
    const auto b = phrase_set(1);
    for (const auto& p : a) EXPECT_FALSE(b.contains(p)) << p.first;
  }
}

TEST(CorpusTest, MissingLexiconItemIsConfigError) {
  const Lexicon partial = Lexicon::from_json(
      {{"gender", {{"nouns", {"man"}}}}, {"upper_clothing", {{"nouns", {"shirt"}}}}});
  EXPECT_THROW(generate_dataset(CorpusConfig{}, partial, 1), ConfigError);
  CorpusConfig bad;
  bad.lexicon_path = "/nonexistent/lexicon.json";
  EXPECT_THROW(generate_dataset(bad, 1), ConfigError);
}

TEST(CorpusTest, RejectsDegenerateCounts) {
  CorpusConfig cfg;
  cfg.n_identities = 1;
  EXPECT_THROW(generate_dataset(cfg, 1), ConfigError);
  cfg = CorpusConfig{};
  cfg.captions_per_image = 0;
  EXPECT_THROW(generate_dataset(cfg, 1), ConfigError);
}

TEST(CorpusTest, ZeroNoiseRenderIsDeterministic) {
  const Identity x = MakeIdentity(0, "red");
  EXPECT_TRUE(render_image(x, 0.0, 1).patch_grid == render_image(x, 0.0, 2).patch_grid);
  EXPECT_TRUE(render_image(x, 0.1, 5).patch_grid == render_image(x, 0.1, 5).patch_grid);
  EXPECT_FALSE(render_image(x, 0.1, 5).patch_grid == render_image(x, 0.1, 6).patch_grid);
  EXPECT_THROW(render_image(x, -0.1, 1), std::invalid_argument);
}

TEST(CorpusTest, UpperClothingChangeOnlyTouchesUpperRegion) {
  const GridLayout layout;
  const ag::Matrix a = render_image(MakeIdentity(0, "red"), 0.0, 1).patch_grid;
  const ag::Matrix b = render_image(MakeIdentity(1, "blue"), 0.0, 1).patch_grid;
  const auto region = item_region(AttributeItem::kUpperClothing, layout);
  const std::set<int> upper(region.begin(), region.end());
  for (int cell = 0; cell < layout.patch_count(); ++cell) {
    const bool differs = !(a.row(cell) == b.row(cell));
    EXPECT_EQ(differs, upper.contains(cell)) << "cell " << cell;
  }
  // Upper rows are 2..5 of a 12 x 4 grid.
  EXPECT_EQ(*upper.begin(), 2 * layout.cols);
  EXPECT_EQ(*upper.rbegin(), 6 * layout.cols - 1);
}

TEST(CorpusTest, RegionsPartitionTheGrid) {
  const GridLayout layout;
  std::vector<int> hits(static_cast<std::size_t>(layout.patch_count()), 0);
  for (AttributeItem item : {AttributeItem::kHeadItem, AttributeItem::kUpperClothing,
                             AttributeItem::kLowerClothing, AttributeItem::kFootItem,
                             AttributeItem::kAccessory}) {
    for (int cell : item_region(item, layout)) ++hits[static_cast<std::size_t>(cell)];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  const auto foot = item_region(AttributeItem::kFootItem, layout);
  for (int cell : foot) {
    const int col = cell % layout.cols;
    EXPECT_TRUE(col == 0 || col == layout.cols - 1);
    EXPECT_GE(cell / layout.cols, 9);
  }
}

TEST(CorpusTest, NoiseStdMatchesSigma) {
  const Identity x = MakeIdentity(0, "red");
  const ag::Matrix clean = render_image(x, 0.0, 1).patch_grid;
  double sum_sq = 0.0;
  long n = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {  // 30 x 48 = 1440 patches
    const ag::Matrix noisy = render_image(x, 0.1, seed).patch_grid;
    sum_sq += (noisy - clean).squaredNorm();
    n += noisy.size();
  }
  const double std_dev = std::sqrt(sum_sq / static_cast<double>(n));
  EXPECT_NEAR(std_dev, 0.1, 0.02);
}

TEST(CorpusTest, SeparabilityAtZeroNoise) {
  CorpusConfig cfg;
  cfg.n_identities = 8;
  cfg.distinct_attributes = true;
  cfg.noise_sigma = 0.0;
  const Dataset ds = generate_dataset(cfg, 3);
  for (const auto& a : ds.images) {
    for (const auto& b : ds.images) {
      if (a.identity_id == b.identity_id) continue;
      const ag::Matrix& same = ds.images[static_cast<std::size_t>(
          a.identity_id * cfg.images_per_identity + (a.image_id + 1) % cfg.images_per_identity)]
                                   .patch_grid;
      EXPECT_LT(FlatCosine(a.patch_grid, b.patch_grid), FlatCosine(a.patch_grid, same));
    }
  }
}

TEST(CorpusTest, RenderCaptionExample) {
  const Lexicon lex = Lexicon::builtin();
  const Identity x = MakeIdentity(0, "red");
  bool saw_reference = false;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::string text = render_caption(x, 3, seed, lex);
    saw_reference = saw_reference || text == "A man wears a red shirt and black shorts.";
    EXPECT_EQ(parse_description(text, lex).size(), 3u) << text;
  }
  EXPECT_TRUE(saw_reference);
}

TEST(CorpusTest, RenderCaptionSubsetSize) {
  const Lexicon lex = Lexicon::builtin();
  const Identity x = MakeIdentity(0, "red");
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    EXPECT_EQ(parse_description(render_caption(x, 2, seed, lex), lex).size(), 2u);
  }
  EXPECT_THROW(render_caption(x, 1, 0, lex), std::invalid_argument);
  EXPECT_THROW(render_caption(x, 4, 0, lex), std::invalid_argument);
}

TEST(CorpusTest, RoundTripOnThousandRandomIdentities) {
  CorpusConfig cfg;
  cfg.n_identities = 1000;
  cfg.images_per_identity = 1;
  cfg.captions_per_image = 1;
  const Dataset ds = generate_dataset(cfg, 99);
  int recovered = 0;
  for (std::size_t i = 0; i < ds.identities.size(); ++i) {
    const Identity& ident = ds.identities[i];
    const int n = static_cast<int>(ident.attributes.size());
    const auto rendered = render_caption_detailed(ident, 2 + static_cast<int>(i) % (n - 1),
                                                  1000 + i, ds.lexicon);
    const auto parsed = parse_description(rendered.text, ds.lexicon);
    bool ok = parsed.size() == rendered.mentioned.size();
    for (std::size_t k = 0; ok && k < parsed.size(); ++k) {
      ok = parsed[k].noun == rendered.mentioned[k].noun &&
           parsed[k].adjectives == rendered.mentioned[k].adjectives &&
           parsed[k].attribute_item == rendered.mentioned[k].item;
    }
    recovered += ok ? 1 : 0;
  }
  EXPECT_EQ(recovered, 1000);
}

TEST(CorpusTest, SaveLoadRoundTrip) {
  CorpusConfig cfg;
  cfg.n_identities = 5;
  const Dataset ds = generate_dataset(cfg, 4);
  const auto dir = std::filesystem::temp_directory_path() / "tpsearch_corpus_test";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir);
  for (const char* f : {"captions.jsonl", "images.json", "identities.json", "lexicon.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const Dataset back = load_dataset(dir);
  EXPECT_EQ(captions_jsonl(back), captions_jsonl(ds));
  ASSERT_EQ(back.images.size(), ds.images.size());
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    EXPECT_TRUE(back.images[i].patch_grid == ds.images[i].patch_grid);
  }
  for (std::size_t i = 0; i < ds.captions.size(); ++i) {
    EXPECT_EQ(back.captions[i].phrases, ds.captions[i].phrases);
  }
  EXPECT_EQ(back.identities.size(), ds.identities.size());
  EXPECT_EQ(back.identities[2].attributes, ds.identities[2].attributes);
  std::filesystem::remove_all(dir);
}

TEST(CorpusTest, SplitHoldsOutLastImage) {
  const Dataset ds = generate_dataset(CorpusConfig{}, 7);
  const DatasetSplit split = split_dataset(ds);
  EXPECT_EQ(split.train_captions.size(), 300u);
  EXPECT_EQ(split.test_captions.size(), 100u);
  for (int ci : split.test_captions) {
    EXPECT_EQ(ds.captions[static_cast<std::size_t>(ci)].image_id % 4, 3);
  }
  CorpusConfig one;
  one.images_per_identity = 1;
  one.n_identities = 4;
  const Dataset ds1 = generate_dataset(one, 7);
  const DatasetSplit split1 = split_dataset(ds1);
  EXPECT_EQ(split1.test_captions.size(), 4u);
  EXPECT_EQ(split1.train_captions.size(), 4u);
}

TEST(CorpusTest, ConfigJsonRoundTrip) {
  CorpusConfig cfg;
  cfg.n_identities = 9;
  cfg.noise_sigma = 0.25;
  cfg.distinct_attributes = true;
  const nlohmann::json j = cfg;
  const CorpusConfig back = j.get<CorpusConfig>();
  EXPECT_EQ(back.n_identities, 9);
  EXPECT_DOUBLE_EQ(back.noise_sigma, 0.25);
  EXPECT_TRUE(back.distinct_attributes);
  EXPECT_EQ(back.layout.rows, 12);
}

}  // namespace
}  // namespace tpsearch
