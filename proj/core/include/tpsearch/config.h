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

// Run configuration: a JSON file with blocks {corpus, encoder, loss, train}.
// Any leaf can be overridden from the environment using its upper-cased
// dotted path (TRAIN.EPOCHS=5) or the underscore form TPSEARCH_TRAIN_EPOCHS.

#ifndef TPSEARCH_CONFIG_H_
#define TPSEARCH_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "tpsearch/corpus.h"
#include "tpsearch/encoders.h"
#include "tpsearch/losses.h"
#include "tpsearch/midgen.h"

namespace tpsearch {

enum class SamplerKind { kShuffle, kIdentityBalanced };

struct TrainConfig {
  int epochs = 30;
  int warmup_epochs = 5;
  double base_lr = 1e-3;
  double weight_decay = 0.1;
  int batch_size = 8;
  int k_m = 3;
  int k_p = 3;
  std::uint64_t seed = 7;
  MidMode mid_mode = MidMode::kAdjectiveAndPhrase;
  SamplerKind sampler = SamplerKind::kShuffle;
  // Captions per identity in an identity-balanced batch.
  int captions_per_identity = 2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Re-render image noise every epoch instead of reusing stored grids.
  bool fresh_noise = true;
  // Number of per-epoch checkpoints kept on disk (0 keeps all).
  int keep_checkpoints = 3;

  // The fine-tuning schedule used with pre-trained towers: 60 epochs at 1e-5.
  static TrainConfig fine_tune_preset();
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct AppConfig {
  CorpusConfig corpus;
  EncoderConfig encoder;
  LossParams loss;
  TrainConfig train;
};

void to_json(nlohmann::json& j, const AppConfig& c);
void from_json(const nlohmann::json& j, AppConfig& c);

using EnvLookup = std::function<const char*(const std::string&)>;

// Returns `j` with every leaf that has an environment override replaced.
// Values are parsed as JSON when possible, else taken as strings.
nlohmann::json apply_env_overrides(nlohmann::json j, const EnvLookup& lookup);
nlohmann::json apply_env_overrides(nlohmann::json j);

// Reads the file (missing blocks take defaults; an empty path means all
// defaults), then applies environment overrides. Throws ConfigError on
// unreadable or malformed input.
AppConfig load_config(const std::filesystem::path& path);
AppConfig config_from_json(const nlohmann::json& j);

}  // namespace tpsearch

#endif  // TPSEARCH_CONFIG_H_
