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

#include "tpsearch/config.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace tpsearch {
namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

void override_leaves(nlohmann::json& node, const std::string& path, const EnvLookup& lookup) {
  if (node.is_object()) {
    for (auto& [key, child] : node.items()) {
      override_leaves(child, path.empty() ? key : path + "." + key, lookup);
    }
    return;
  }
  const std::string dotted = upper(path);
  std::string underscored = "TPSEARCH_" + dotted;
  std::replace(underscored.begin(), underscored.end(), '.', '_');
  const char* raw = lookup(dotted);
  if (raw == nullptr) raw = lookup(underscored);
  if (raw == nullptr) return;
  auto parsed = nlohmann::json::parse(raw, nullptr, false);
  node = parsed.is_discarded() ? nlohmann::json(std::string(raw)) : parsed;
}

std::string_view sampler_key(SamplerKind kind) {
  return kind == SamplerKind::kIdentityBalanced ? "identity_balanced" : "shuffle";
}

SamplerKind parse_sampler(std::string_view key) {
  if (key == "shuffle") return SamplerKind::kShuffle;
  if (key == "identity_balanced") return SamplerKind::kIdentityBalanced;
  throw ConfigError("unknown sampler '" + std::string(key) + "'");
}

}  // namespace

TrainConfig TrainConfig::fine_tune_preset() {
  TrainConfig c;
  c.epochs = 60;
  c.base_lr = 1e-5;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs >= epochs) {
    throw ConfigError("train: need 0 <= warmup_epochs < epochs");
  }
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (k_m < 0 || k_p < 0) throw ConfigError("train: k_m and k_p must be >= 0");
  if (!(base_lr >= 0) || !(weight_decay >= 0)) {
    throw ConfigError("train: base_lr and weight_decay must be >= 0");
  }
  if (captions_per_identity < 1) throw ConfigError("train: captions_per_identity must be >= 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"epochs", c.epochs},
       {"warmup_epochs", c.warmup_epochs},
       {"base_lr", c.base_lr},
       {"weight_decay", c.weight_decay},
       {"batch_size", c.batch_size},
       {"k_m", c.k_m},
       {"k_p", c.k_p},
       {"seed", c.seed},
       {"mid_mode", std::string(mid_mode_key(c.mid_mode))},
       {"sampler", std::string(sampler_key(c.sampler))},
       {"captions_per_identity", c.captions_per_identity},
       {"adam_beta1", c.adam_beta1},
       {"adam_beta2", c.adam_beta2},
       {"adam_eps", c.adam_eps},
       {"fresh_noise", c.fresh_noise},
       {"keep_checkpoints", c.keep_checkpoints}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.epochs = j.value("epochs", d.epochs);
  c.warmup_epochs = j.value("warmup_epochs", d.warmup_epochs);
  c.base_lr = j.value("base_lr", d.base_lr);
  c.weight_decay = j.value("weight_decay", d.weight_decay);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.k_m = j.value("k_m", d.k_m);
  c.k_p = j.value("k_p", d.k_p);
  c.seed = j.value("seed", d.seed);
  c.mid_mode = parse_mid_mode(j.value("mid_mode", std::string(mid_mode_key(d.mid_mode))));
  c.sampler = parse_sampler(j.value("sampler", std::string(sampler_key(d.sampler))));
  c.captions_per_identity = j.value("captions_per_identity", d.captions_per_identity);
  c.adam_beta1 = j.value("adam_beta1", d.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", d.adam_beta2);
  c.adam_eps = j.value("adam_eps", d.adam_eps);
  c.fresh_noise = j.value("fresh_noise", d.fresh_noise);
  c.keep_checkpoints = j.value("keep_checkpoints", d.keep_checkpoints);
}

void to_json(nlohmann::json& j, const AppConfig& c) {
  j = {{"corpus", c.corpus}, {"encoder", c.encoder}, {"loss", c.loss}, {"train", c.train}};
}

void from_json(const nlohmann::json& j, AppConfig& c) {
  const auto block = [&j](const char* name) {
    return j.contains(name) ? j.at(name) : nlohmann::json::object();
  };
  c.corpus = block("corpus").get<CorpusConfig>();
  c.encoder = block("encoder").get<EncoderConfig>();
  c.loss = block("loss").get<LossParams>();
  c.train = block("train").get<TrainConfig>();
}

nlohmann::json apply_env_overrides(nlohmann::json j, const EnvLookup& lookup) {
  override_leaves(j, "", lookup);
  return j;
}

nlohmann::json apply_env_overrides(nlohmann::json j) {
  return apply_env_overrides(std::move(j),
                             [](const std::string& name) { return std::getenv(name.c_str()); });
}

AppConfig config_from_json(const nlohmann::json& j) {
  AppConfig c;
  try {
    c = j.get<AppConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.train.validate();
  try {
    c.loss.validate();
    c.encoder.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: " + path.string() + ": " + e.what());
    }
  }
  // Fill defaults first so every leaf is overridable.
  nlohmann::json full = config_from_json(j);
  return config_from_json(apply_env_overrides(std::move(full)));
}

}  // namespace tpsearch
