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

#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include <gtest/gtest.h>

#include "test_support.h"
#include "tpsearch/checkpoint.h"

namespace tpsearch {
namespace {

TEST(TrainConfigTest, DefaultsAndPreset) {
  const TrainConfig c;
  EXPECT_EQ(c.epochs, 30);
  EXPECT_EQ(c.warmup_epochs, 5);
  EXPECT_EQ(c.k_m, 3);
  EXPECT_EQ(c.k_p, 3);
  EXPECT_EQ(c.weight_decay, 0.1);
  const TrainConfig tuned = TrainConfig::fine_tune_preset();
  EXPECT_EQ(tuned.epochs, 60);
  EXPECT_EQ(tuned.base_lr, 1e-5);
  EXPECT_EQ(tuned.warmup_epochs, 5);
  EXPECT_EQ(tuned.weight_decay, 0.1);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  c.warmup_epochs = c.epochs;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.k_m = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(AppConfigTest, JsonRoundTripAndPartialBlocks) {
  AppConfig c;
  c.train.epochs = 4;
  c.train.warmup_epochs = 1;
  c.loss.lambda1 = 0.5;
  c.encoder.embed_dim = 32;
  c.corpus.n_identities = 9;
  const nlohmann::json j = c;
  for (const char* block : {"corpus", "encoder", "loss", "train"}) {
    EXPECT_TRUE(j.contains(block)) << block;
  }
  const AppConfig back = config_from_json(j);
  EXPECT_EQ(nlohmann::json(back), j);
  const AppConfig partial = config_from_json({{"train", {{"epochs", 8}}}});
  EXPECT_EQ(partial.train.epochs, 8);
  EXPECT_EQ(partial.loss.s, 30.0);
}

TEST(AppConfigTest, MalformedValuesAreConfigErrors) {
  EXPECT_THROW(config_from_json({{"train", {{"epochs", "many"}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"loss", {{"align_mode", "bogus"}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"train", {{"epochs", 2}, {"warmup_epochs", 5}}}}), ConfigError);
}

TEST(EnvOverrideTest, DottedAndPrefixedKeys) {
  const std::map<std::string, std::string> env = {{"TRAIN.EPOCHS", "12"},
                                                  {"TPSEARCH_LOSS_LAMBDA1", "0.5"},
                                                  {"TRAIN.MID_MODE", "full_component"},
                                                  {"CORPUS.GRID_ROWS", "24"}};
  const EnvLookup lookup = [&](const std::string& name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  const nlohmann::json base = AppConfig{};
  const AppConfig c = config_from_json(apply_env_overrides(base, lookup));
  EXPECT_EQ(c.train.epochs, 12);
  EXPECT_EQ(c.loss.lambda1, 0.5);
  EXPECT_EQ(c.train.mid_mode, MidMode::kFullComponent);
  EXPECT_EQ(c.corpus.layout.rows, 24);
}

TEST(EnvOverrideTest, LoadConfigAppliesDefaultsThenOverrides) {
  const auto path = std::filesystem::temp_directory_path() / "tpsearch_config_test.json";
  std::ofstream(path) << R"({"train": {"epochs": 7}})";
  const AppConfig c = load_config(path);
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.encoder.embed_dim, 64);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  EXPECT_EQ(load_config("").train.epochs, TrainConfig{}.epochs);
}

TEST(CheckpointTest, RoundTripIsExact) {
  Checkpoint ckpt;
  ckpt.meta = {{"step", 12}, {"note", "x"}};
  ckpt.tensors.emplace_back("a", testing::random_normal(3, 4, 1));
  ckpt.tensors.emplace_back("b", testing::random_normal(1, 1, 2));
  ckpt.tensors.emplace_back("empty", ag::Matrix(0, 5));
  const auto path = std::filesystem::temp_directory_path() / "tpsearch_ckpt_test.ckpt";
  write_checkpoint(path, ckpt);
  const Checkpoint back = read_checkpoint(path);
  EXPECT_EQ(back.meta, ckpt.meta);
  ASSERT_EQ(back.tensors.size(), 3u);
  EXPECT_TRUE(back.tensor("a") == ckpt.tensor("a"));
  EXPECT_TRUE(back.tensor("b") == ckpt.tensor("b"));
  EXPECT_EQ(back.tensor("empty").cols(), 5);
  EXPECT_THROW(back.tensor("missing"), std::out_of_range);
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "tpsearch_bad.ckpt";
  std::ofstream(path) << "not a checkpoint";
  EXPECT_THROW(read_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
  EXPECT_THROW(read_checkpoint("/nonexistent.ckpt"), std::runtime_error);
}

}  // namespace
}  // namespace tpsearch
