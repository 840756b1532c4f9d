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
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "tpsearch/caption_render.h"
#include "tpsearch/seeds.h"

namespace tpsearch {
namespace {

using Rng = std::mt19937_64;

constexpr std::array<AttributeItem, 5> kBodyItems = {
    AttributeItem::kHeadItem, AttributeItem::kUpperClothing,
    AttributeItem::kLowerClothing, AttributeItem::kFootItem, AttributeItem::kAccessory};

int canonical_rank(AttributeItem item) {
  switch (item) {
    case AttributeItem::kGender:
      return 0;
    case AttributeItem::kHeadItem:
      return 1;
    case AttributeItem::kUpperClothing:
      return 2;
    case AttributeItem::kLowerClothing:
      return 3;
    case AttributeItem::kFootItem:
      return 4;
    case AttributeItem::kAccessory:
      return 5;
  }
  return 6;
}

Eigen::RowVectorXd hashed_direction(std::string_view key, int dim) {
  Rng rng(splitmix64(fnv1a64(key)));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::RowVectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  return v;
}

AttributeValue sample_value(AttributeItem item, const Lexicon& lexicon, Rng& rng) {
  const ItemLexicon& entry = lexicon.item(item);
  AttributeValue value;
  value.item = item;
  value.noun = entry.nouns[std::uniform_int_distribution<std::size_t>(
      0, entry.nouns.size() - 1)(rng)];
  if (item == AttributeItem::kGender || entry.adjectives.empty()) return value;
  // 0, 1 or 2 adjectives with weights 15/50/35.
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  std::size_t count = u < 0.15 ? 0 : (u < 0.65 ? 1 : 2);
  count = std::min(count, entry.adjectives.size());
  std::vector<std::string> pool = entry.adjectives;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
    value.adjectives.push_back(pool[i]);
  }
  return value;
}

using ValueKey = std::tuple<int, std::string, std::vector<std::string>>;

ValueKey key_of(const AttributeValue& v) {
  return {static_cast<int>(v.item), v.noun, v.adjectives};
}

Identity sample_identity(int id, const CorpusConfig& config, const Lexicon& lexicon,
                         std::uint64_t seed, std::set<ValueKey>* used) {
  Rng rng(seed);
  auto draw = [&](AttributeItem item) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      AttributeValue v = sample_value(item, lexicon, rng);
      if (used == nullptr || used->insert(key_of(v)).second) return v;
    }
    // Gender has two values, so uniqueness is best-effort for it.
    if (item == AttributeItem::kGender) return sample_value(item, lexicon, rng);
    throw ConfigError("corpus: cannot draw distinct values for item '" +
                      std::string(item_key(item)) + "'; lexicon too small");
  };

  Identity identity;
  identity.id = id;
  identity.attributes.push_back(draw(AttributeItem::kGender));

  const int lo = std::clamp(config.min_items, 0, 5);
  const int hi = std::clamp(config.max_items, lo, 5);
  const int n_items = std::uniform_int_distribution<int>(lo, hi)(rng);
  std::vector<AttributeItem> items(kBodyItems.begin(), kBodyItems.end());
  std::shuffle(items.begin(), items.end(), rng);
  items.resize(static_cast<std::size_t>(n_items));
  std::sort(items.begin(), items.end(), [](AttributeItem a, AttributeItem b) {
    return canonical_rank(a) < canonical_rank(b);
  });
  for (AttributeItem item : items) identity.attributes.push_back(draw(item));
  return identity;
}

void validate(const CorpusConfig& c) {
  if (c.n_identities < 2) throw ConfigError("corpus: n_identities must be >= 2");
  if (c.images_per_identity < 1) throw ConfigError("corpus: images_per_identity must be >= 1");
  if (c.captions_per_image < 1) throw ConfigError("corpus: captions_per_image must be >= 1");
  if (c.noise_sigma < 0) throw ConfigError("corpus: noise_sigma must be >= 0");
  if (c.min_items < 1 || c.max_items > 5 || c.min_items > c.max_items) {
    throw ConfigError("corpus: need 1 <= min_items <= max_items <= 5");
  }
  if (c.layout.rows < 4 || c.layout.cols < 3 || c.layout.patch_dim < 1) {
    throw ConfigError("corpus: grid layout must be at least 4x3 with patch_dim >= 1");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json value_to_json(const AttributeValue& v) {
  return {{"item", std::string(item_key(v.item))},
          {"noun", v.noun},
          {"adjectives", v.adjectives}};
}

AttributeValue value_from_json(const nlohmann::json& j) {
  AttributeValue v;
  const auto item = parse_item_key(j.at("item").get<std::string>());
  if (!item) throw ConfigError("identities: unknown item " + j.at("item").dump());
  v.item = *item;
  v.noun = j.at("noun").get<std::string>();
  v.adjectives = j.at("adjectives").get<std::vector<std::string>>();
  return v;
}

}  // namespace

const AttributeValue* Identity::find(AttributeItem item) const {
  for (const auto& v : attributes) {
    if (v.item == item) return &v;
  }
  return nullptr;
}

void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = {{"n_identities", c.n_identities},
       {"images_per_identity", c.images_per_identity},
       {"captions_per_image", c.captions_per_image},
       {"lexicon_path", c.lexicon_path},
       {"noise_sigma", c.noise_sigma},
       {"gender_bias", c.gender_bias},
       {"min_items", c.min_items},
       {"max_items", c.max_items},
       {"distinct_attributes", c.distinct_attributes},
       {"grid_rows", c.layout.rows},
       {"grid_cols", c.layout.cols},
       {"patch_dim", c.layout.patch_dim}};
}

void from_json(const nlohmann::json& j, CorpusConfig& c) {
  const CorpusConfig d;
  c.n_identities = j.value("n_identities", d.n_identities);
  c.images_per_identity = j.value("images_per_identity", d.images_per_identity);
  c.captions_per_image = j.value("captions_per_image", d.captions_per_image);
  c.lexicon_path = j.value("lexicon_path", d.lexicon_path);
  c.noise_sigma = j.value("noise_sigma", d.noise_sigma);
  c.gender_bias = j.value("gender_bias", d.gender_bias);
  c.min_items = j.value("min_items", d.min_items);
  c.max_items = j.value("max_items", d.max_items);
  c.distinct_attributes = j.value("distinct_attributes", d.distinct_attributes);
  c.layout.rows = j.value("grid_rows", d.layout.rows);
  c.layout.cols = j.value("grid_cols", d.layout.cols);
  c.layout.patch_dim = j.value("patch_dim", d.layout.patch_dim);
}

std::vector<int> item_region(AttributeItem item, const GridLayout& layout) {
  const int r = layout.rows;
  const int c = layout.cols;
  const int head_end = r / 6;
  const int upper_end = r / 2;
  const int lower_end = (3 * r) / 4;
  int row_begin = 0;
  int row_end = 0;
  bool outer = true;
  bool inner = true;
  switch (item) {
    case AttributeItem::kHeadItem:
      row_begin = 0;
      row_end = head_end;
      break;
    case AttributeItem::kUpperClothing:
      row_begin = head_end;
      row_end = upper_end;
      break;
    case AttributeItem::kLowerClothing:
      row_begin = upper_end;
      row_end = lower_end;
      break;
    case AttributeItem::kFootItem:
      row_begin = lower_end;
      row_end = r;
      inner = false;
      break;
    case AttributeItem::kAccessory:
      row_begin = lower_end;
      row_end = r;
      outer = false;
      break;
    case AttributeItem::kGender:
      return {};
  }
  std::vector<int> cells;
  for (int row = row_begin; row < row_end; ++row) {
    for (int col = 0; col < c; ++col) {
      const bool is_outer = col == 0 || col == c - 1;
      if ((is_outer && outer) || (!is_outer && inner)) cells.push_back(row * c + col);
    }
  }
  return cells;
}

Eigen::RowVectorXd attribute_base_vector(const AttributeValue& value, int patch_dim) {
  Eigen::RowVectorXd v = hashed_direction(
      "noun|" + std::string(item_key(value.item)) + "|" + value.noun, patch_dim);
  for (const auto& adj : value.adjectives) v += hashed_direction("adj|" + adj, patch_dim);
  return v * (std::sqrt(static_cast<double>(patch_dim)) / v.norm());
}

ImageSpec render_image(const Identity& identity, double noise_sigma, std::uint64_t seed,
                       const GridLayout& layout, double gender_bias) {
  if (noise_sigma < 0) throw std::invalid_argument("render_image: noise_sigma < 0");
  ImageSpec image;
  image.identity_id = identity.id;
  image.noise_seed = seed;
  image.patch_grid = ag::Matrix::Zero(layout.patch_count(), layout.patch_dim);
  for (const AttributeValue& value : identity.attributes) {
    const Eigen::RowVectorXd base = attribute_base_vector(value, layout.patch_dim);
    if (value.item == AttributeItem::kGender) {
      image.patch_grid.rowwise() += gender_bias * base;
      continue;
    }
    for (int cell : item_region(value.item, layout)) image.patch_grid.row(cell) += base;
  }
  if (noise_sigma > 0) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (Eigen::Index i = 0; i < image.patch_grid.rows(); ++i) {
      for (Eigen::Index j = 0; j < image.patch_grid.cols(); ++j) {
        image.patch_grid(i, j) += noise(rng);
      }
    }
  }
  return image;
}

RenderedCaption render_caption_detailed(const Identity& identity, int subset_size,
                                        std::uint64_t seed, const Lexicon& lexicon) {
  const int n = static_cast<int>(identity.attributes.size());
  if (subset_size < 2 || subset_size > n) {
    throw std::invalid_argument("render_caption: subset_size " + std::to_string(subset_size) +
                                " outside [2, " + std::to_string(n) + "]");
  }
  Rng rng(splitmix64(seed));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(static_cast<std::size_t>(subset_size));

  // Mention order must follow the template: subject, wearing, decorations.
  std::vector<AttributeValue> gender, wearing, carrying;
  for (int idx : order) {
    const AttributeValue& v = identity.attributes[static_cast<std::size_t>(idx)];
    switch (categorize_noun(v.noun, lexicon).first) {
      case NounCategory::kGender:
        gender.push_back(v);
        break;
      case NounCategory::kWearing:
        wearing.push_back(v);
        break;
      case NounCategory::kDecoration:
        carrying.push_back(v);
        break;
    }
  }
  RenderedCaption out;
  for (auto* group : {&gender, &wearing, &carrying}) {
    out.mentioned.insert(out.mentioned.end(), group->begin(), group->end());
  }
  std::vector<PhraseParts> parts;
  for (const AttributeValue& v : out.mentioned) {
    parts.push_back({v.adjectives, v.noun, categorize_noun(v.noun, lexicon).first});
  }
  out.text = render_sentence(parts, static_cast<int>(seed % kCaptionTemplateCount));
  return out;
}

std::string render_caption(const Identity& identity, int subset_size, std::uint64_t seed,
                           const Lexicon& lexicon) {
  return render_caption_detailed(identity, subset_size, seed, lexicon).text;
}

Dataset generate_dataset(const CorpusConfig& config, std::uint64_t seed) {
  const Lexicon lexicon = config.lexicon_path.empty() ? Lexicon::builtin()
                                                      : Lexicon::load(config.lexicon_path);
  return generate_dataset(config, lexicon, seed);
}

Dataset generate_dataset(const CorpusConfig& config, const Lexicon& lexicon,
                         std::uint64_t seed) {
  validate(config);
  for (AttributeItem item : kAllItems) {
    if (!lexicon.has_item(item)) {
      throw ConfigError("corpus: lexicon is missing attribute item '" +
                        std::string(item_key(item)) + "'");
    }
  }
  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.lexicon = lexicon;

  std::set<ValueKey> used;
  for (int i = 0; i < config.n_identities; ++i) {
    ds.identities.push_back(sample_identity(
        i, config, lexicon, derive_seed(seed, "identity", {static_cast<std::uint64_t>(i)}),
        config.distinct_attributes ? &used : nullptr));
  }

  for (const Identity& identity : ds.identities) {
    const auto id = static_cast<std::uint64_t>(identity.id);
    const int n_attrs = static_cast<int>(identity.attributes.size());
    for (int j = 0; j < config.images_per_identity; ++j) {
      const std::uint64_t noise_seed =
          derive_seed(seed, "image", {id, static_cast<std::uint64_t>(j)});
      ImageSpec image = render_image(identity, config.noise_sigma, noise_seed,
                                     config.layout, config.gender_bias);
      image.image_id = identity.id * config.images_per_identity + j;
      for (int k = 0; k < config.captions_per_image; ++k) {
        const std::uint64_t caption_seed = derive_seed(
            seed, "caption",
            {id, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k)});
        Rng size_rng(derive_seed(caption_seed, "subset"));
        const int subset = std::uniform_int_distribution<int>(2, n_attrs)(size_rng);
        CaptionRecord rec;
        rec.caption_id = image.image_id * config.captions_per_image + k;
        rec.identity_id = identity.id;
        rec.image_id = image.image_id;
        rec.text = render_caption(identity, subset, caption_seed, lexicon);
        rec.phrases = parse_description(rec.text, lexicon);
        ds.captions.push_back(std::move(rec));
      }
      ds.images.push_back(std::move(image));
    }
  }
  return ds;
}

std::string captions_jsonl(const Dataset& dataset) {
  std::string out;
  for (const CaptionRecord& c : dataset.captions) {
    const nlohmann::json j = {{"caption_id", c.caption_id},
                              {"identity_id", c.identity_id},
                              {"image_id", c.image_id},
                              {"text", c.text}};
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& payload) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir / name).string());
    out << payload;
  };
  write("captions.jsonl", captions_jsonl(dataset));

  nlohmann::json images = nlohmann::json::array();
  for (const ImageSpec& im : dataset.images) {
    nlohmann::json grid = nlohmann::json::array();
    for (Eigen::Index r = 0; r < im.patch_grid.rows(); ++r) {
      grid.push_back(std::vector<double>(im.patch_grid.row(r).begin(),
                                         im.patch_grid.row(r).end()));
    }
    images.push_back({{"image_id", im.image_id},
                      {"identity_id", im.identity_id},
                      {"noise_seed", im.noise_seed},
                      {"grid", std::move(grid)}});
  }
  write("images.json", images.dump() + "\n");

  nlohmann::json identities = nlohmann::json::array();
  for (const Identity& id : dataset.identities) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& v : id.attributes) attrs.push_back(value_to_json(v));
    identities.push_back({{"id", id.id}, {"attributes", std::move(attrs)}});
  }
  write("identities.json", identities.dump(1) + "\n");
  write("lexicon.json", dataset.lexicon.to_json().dump(2) + "\n");
  write("corpus.json",
        nlohmann::json{{"config", dataset.config}, {"seed", dataset.seed}}.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / "corpus.json"));
    ds.config = meta.at("config").get<CorpusConfig>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.lexicon = Lexicon::from_json(nlohmann::json::parse(read_file(dir / "lexicon.json")));
    for (const auto& j : nlohmann::json::parse(read_file(dir / "identities.json"))) {
      Identity id;
      id.id = j.at("id").get<int>();
      for (const auto& v : j.at("attributes")) id.attributes.push_back(value_from_json(v));
      ds.identities.push_back(std::move(id));
    }
    for (const auto& j : nlohmann::json::parse(read_file(dir / "images.json"))) {
      ImageSpec im;
      im.image_id = j.at("image_id").get<int>();
      im.identity_id = j.at("identity_id").get<int>();
      im.noise_seed = j.at("noise_seed").get<std::uint64_t>();
      const auto& grid = j.at("grid");
      const auto rows = static_cast<Eigen::Index>(grid.size());
      const auto cols = rows > 0 ? static_cast<Eigen::Index>(grid[0].size()) : 0;
      im.patch_grid.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) im.patch_grid(r, c) = grid[r][c].get<double>();
      }
      ds.images.push_back(std::move(im));
    }
    std::istringstream lines(read_file(dir / "captions.jsonl"));
    for (std::string line; std::getline(lines, line);) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      CaptionRecord rec;
      rec.caption_id = j.at("caption_id").get<int>();
      rec.identity_id = j.at("identity_id").get<int>();
      rec.image_id = j.at("image_id").get<int>();
      rec.text = j.at("text").get<std::string>();
      rec.phrases = parse_description(rec.text, ds.lexicon);
      ds.captions.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("dataset " + dir.string() + ": " + e.what());
  }
  return ds;
}

DatasetSplit split_dataset(const Dataset& dataset) {
  DatasetSplit split;
  const int ipi = dataset.config.images_per_identity;
  const int cpi = dataset.config.captions_per_image;
  for (std::size_t i = 0; i < dataset.captions.size(); ++i) {
    const CaptionRecord& c = dataset.captions[i];
    bool test = false;
    if (ipi >= 2) {
      test = c.image_id % ipi == ipi - 1;
    } else if (cpi >= 2) {
      test = c.caption_id % cpi == cpi - 1;
    }
    (test ? split.test_captions : split.train_captions).push_back(static_cast<int>(i));
  }
  return split;
}

}  // namespace tpsearch
