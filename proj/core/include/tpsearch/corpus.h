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

// Synthetic attribute-grounded person corpus: identities with attribute
// sets, patch-grid "images" that encode those attributes spatially, and
// templated captions mentioning random attribute subsets.

#ifndef TPSEARCH_CORPUS_H_
#define TPSEARCH_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/autograd.h"
#include "tpsearch/lexicon.h"
#include "tpsearch/textparse.h"

namespace tpsearch {

struct AttributeValue {
  AttributeItem item = AttributeItem::kUpperClothing;
  std::string noun;
  std::vector<std::string> adjectives;

  friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
};

struct Identity {
  int id = 0;
  // At most one value per item; the gender value is always present.
  std::vector<AttributeValue> attributes;

  const AttributeValue* find(AttributeItem item) const;
};

struct GridLayout {
  int rows = 12;
  int cols = 4;
  int patch_dim = 32;

  int patch_count() const { return rows * cols; }
};

struct ImageSpec {
  int image_id = 0;
  int identity_id = 0;
  // patch_count x patch_dim, patches in row-major grid order.
  ag::Matrix patch_grid;
  std::uint64_t noise_seed = 0;
};

struct CaptionRecord {
  int caption_id = 0;
  int identity_id = 0;
  int image_id = 0;
  std::string text;
  std::vector<AttributePhrase> phrases;
};

struct CorpusConfig {
  int n_identities = 50;
  int images_per_identity = 4;
  int captions_per_image = 2;
  // Empty selects Lexicon::builtin().
  std::string lexicon_path;
  double noise_sigma = 0.1;
  double gender_bias = 0.5;
  int min_items = 3;
  int max_items = 5;
  // Forces every body attribute value to be unique across identities;
  // gender repeats once both of its values are taken.
  bool distinct_attributes = false;
  GridLayout layout;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

struct Dataset {
  CorpusConfig config;
  std::uint64_t seed = 0;
  Lexicon lexicon;
  std::vector<Identity> identities;
  std::vector<ImageSpec> images;
  std::vector<CaptionRecord> captions;
};

// Deterministic in (config, seed). Throws ConfigError for bad counts or a
// lexicon that lacks one of the six attribute items.
Dataset generate_dataset(const CorpusConfig& config, std::uint64_t seed);
// Same, with an explicit lexicon (config.lexicon_path is ignored).
Dataset generate_dataset(const CorpusConfig& config, const Lexicon& lexicon,
                         std::uint64_t seed);

// Region of the grid (patch indices) that carries an attribute item. Gender
// has no region: it is added as a bias to every patch.
std::vector<int> item_region(AttributeItem item, const GridLayout& layout);

// Fixed direction for an attribute value: the normalized sum of hashed
// vectors for (item, noun) and for each adjective.
Eigen::RowVectorXd attribute_base_vector(const AttributeValue& value, int patch_dim);

ImageSpec render_image(const Identity& identity, double noise_sigma, std::uint64_t seed,
                       const GridLayout& layout = {}, double gender_bias = 0.5);

struct RenderedCaption {
  std::string text;
  // Attribute values in mention order.
  std::vector<AttributeValue> mentioned;
};

// Throws std::invalid_argument unless 2 <= subset_size <= #attributes.
RenderedCaption render_caption_detailed(const Identity& identity, int subset_size,
                                        std::uint64_t seed, const Lexicon& lexicon);
std::string render_caption(const Identity& identity, int subset_size, std::uint64_t seed,
                           const Lexicon& lexicon);

// ---- persistence ---------------------------------------------------------

// captions.jsonl, images.json, identities.json, lexicon.json, corpus.json
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// The captions.jsonl payload ({"caption_id","identity_id","image_id","text"}).
std::string captions_jsonl(const Dataset& dataset);

// Train/test caption indices. When identities have several images the last
// image of each identity (and its captions) is held out; otherwise the last
// caption of every image is.
struct DatasetSplit {
  std::vector<int> train_captions;
  std::vector<int> test_captions;
};
DatasetSplit split_dataset(const Dataset& dataset);

}  // namespace tpsearch

#endif  // TPSEARCH_CORPUS_H_
