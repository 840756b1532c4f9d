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

// Batch assembly, the AdamW training loop with warmup + cosine schedule, and
// feature extraction for evaluation.

#ifndef TPSEARCH_TRAINER_H_
#define TPSEARCH_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tpsearch/autograd.h"
#include "tpsearch/checkpoint.h"
#include "tpsearch/config.h"
#include "tpsearch/corpus.h"
#include "tpsearch/encoders.h"
#include "tpsearch/eval.h"
#include "tpsearch/losses.h"
#include "tpsearch/tokenizer.h"

namespace tpsearch {

struct Batch {
  std::vector<int> caption_indices;
  std::vector<int> labels;
  std::vector<ag::Matrix> images;
  std::vector<std::string> caption_texts;
  std::vector<std::vector<int>> caption_tokens;
  std::vector<std::string> mid_texts;
  std::vector<std::vector<int>> mid_tokens;
  std::vector<int> mid_owner;
  std::vector<std::string> prompt_texts;
  std::vector<std::vector<int>> prompt_tokens;
  std::vector<int> prompt_owner;
  std::vector<std::string> prompt_groups;

  nlohmann::json describe() const;
};

// For every caption: its image (re-rendered with fresh noise when
// `noise_sigma` is given), its tokens, k_m sampled MIDs and k_p sampled
// prompts. Deterministic in `seed`.
Batch assemble_batch(const Dataset& dataset, std::span<const int> caption_indices, int k_m,
                     int k_p, std::uint64_t seed, const Tokenizer& tokenizer,
                     MidMode mode = MidMode::kAdjectiveAndPhrase,
                     std::optional<double> noise_sigma = std::nullopt);

// Linear warmup from 0 to base_lr over `warmup_steps`, then cosine decay
// reaching 0 at `total_steps`.
double lr_at(long step, double base_lr, long warmup_steps, long total_steps);

struct Model {
  Tokenizer tokenizer;
  DualEncoder encoder;
  ClassifierWeights heads;

  static Model create(const EncoderConfig& config, const Lexicon& lexicon, int n_classes,
                      std::uint64_t seed);

  // Encoder parameters followed by the two classifier matrices.
  std::vector<ag::Parameter*> parameters();
  std::vector<const ag::Parameter*> parameters() const;
};

// Feature matrices (rows = items, 2d columns) computed without gradients.
ag::Matrix embed_images(const Model& model, std::span<const ag::Matrix> grids);
ag::Matrix embed_texts(const Model& model, std::span<const std::string> texts);

struct BatchForward {
  BatchFeatures features;
  LossTerms terms;
};

// Encodes the batch on `graph` and evaluates every loss term. Prompt texts
// are encoded on a gradient-free side graph.
BatchForward forward_batch(ag::Graph& graph, const Model& model, const Batch& batch,
                           const LossParams& params);

class AdamW {
 public:
  AdamW() = default;
  AdamW(double beta1, double beta2, double eps, double weight_decay)
      : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

  // Frozen parameters are skipped entirely; decay applies only to
  // parameters flagged for it.
  void step(std::span<ag::Parameter* const> params, double lr);

  long steps() const { return t_; }
  std::vector<ag::Matrix>& first_moments() { return m_; }
  std::vector<ag::Matrix>& second_moments() { return v_; }
  const std::vector<ag::Matrix>& first_moments() const { return m_; }
  const std::vector<ag::Matrix>& second_moments() const { return v_; }
  void set_steps(long t) { t_ = t; }

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  double weight_decay_ = 0.0;
  long t_ = 0;
  std::vector<ag::Matrix> m_;
  std::vector<ag::Matrix> v_;
};

struct StepRecord {
  long step = 0;
  int epoch = 0;
  double lr = 0.0;
  LossComponents losses;
};

struct TrainState {
  long step = 0;
  int epoch = 0;  // completed epochs
  std::vector<StepRecord> history;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Trainer {
 public:
  // `run_dir` may be empty, in which case nothing is written to disk.
  Trainer(AppConfig config, const Dataset& dataset, std::filesystem::path run_dir = {});

  // Restores model, optimizer, sampler RNG and history from a checkpoint.
  static Trainer resume(const std::filesystem::path& checkpoint, const Dataset& dataset,
                        std::filesystem::path run_dir = {});

  // Runs the remaining epochs.
  void train();
  void train_epoch();
  StepRecord train_step(const Batch& batch);

  long steps_per_epoch() const;
  long total_steps() const { return steps_per_epoch() * config_.train.epochs; }

  const AppConfig& config() const { return config_; }
  const TrainState& state() const { return state_; }
  Model& model() { return model_; }
  const Model& model() const { return model_; }
  const DatasetSplit& split() const { return split_; }

  Checkpoint make_checkpoint() const;
  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  std::vector<std::vector<int>> epoch_batches();
  void write_loss_row(const StepRecord& rec) const;
  void prune_checkpoints() const;

  AppConfig config_;
  const Dataset* dataset_;
  std::filesystem::path run_dir_;
  DatasetSplit split_;
  Model model_;
  AdamW optimizer_;
  std::mt19937_64 sampler_rng_;
  TrainState state_;
};

// Restores a model from a checkpoint written by Trainer.
Model load_model(const std::filesystem::path& checkpoint, AppConfig* config_out = nullptr);

// Ranks the given captions (optionally with one phrase dropped) against
// every dataset image. `rankings`, when non-null, receives the per-query
// gallery order.
RetrievalReport evaluate_captions(const Model& model, const Dataset& dataset,
                                  std::span<const int> caption_indices, bool drop_phrase = false,
                                  std::uint64_t seed = 0,
                                  std::vector<std::vector<int>>* rankings = nullptr);

}  // namespace tpsearch

#endif  // TPSEARCH_TRAINER_H_
