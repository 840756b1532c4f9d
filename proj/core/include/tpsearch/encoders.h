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

// Dual transformer encoders. The visual tower embeds patch vectors, prepends
// a class token and reads the class output as the global feature; the text
// tower runs a causal transformer and reads the end-of-text output. Both
// towers also GeM-pool their patch/word outputs and return the
// concatenation [global, pooled].

#ifndef TPSEARCH_ENCODERS_H_
#define TPSEARCH_ENCODERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/autograd.h"

namespace tpsearch {

struct EncoderConfig {
  int embed_dim = 64;
  int visual_layers = 4;
  int text_layers = 4;
  int heads = 4;
  int mlp_ratio = 4;
  int patch_count = 48;
  int patch_dim = 32;
  int max_len = 32;
  int frozen_text_layers = 0;
  double gem_q = 3.0;
  bool gem_learnable = false;
  // Activations are clamped to at least this value before the power.
  double gem_eps = 1e-6;
  bool positional_embeddings = true;

  // Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);

struct EmbeddingOutputs {
  ag::Var global;          // 1 x d
  ag::Var pooled;          // 1 x d
  ag::Var concat;          // 1 x 2d
  ag::Var token_features;  // sequence x d, after the final layer norm
};

// Per-column ((1/n) sum max(x, eps)^q)^(1/q). Throws on an empty matrix or
// q < 1.
Eigen::RowVectorXd gem_pool(const ag::Matrix& tokens, double q, double eps = 1e-6);

class DualEncoder {
 public:
  DualEncoder(const EncoderConfig& config, int vocab_size, std::uint64_t init_seed);

  const EncoderConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  int feature_dim() const { return 2 * config_.embed_dim; }

  // `grid` is patch_count x patch_dim. Throws std::invalid_argument on a
  // shape mismatch.
  EmbeddingOutputs encode_image(ag::Graph& graph, const ag::Matrix& grid) const;

  // `token_ids` as produced by Tokenizer::encode; trailing padding is
  // ignored, so padded and unpadded inputs give identical outputs. Throws
  // std::invalid_argument when the sequence holds no word tokens.
  EmbeddingOutputs encode_text(ag::Graph& graph, std::span<const int> token_ids) const;

  // Freezes the bottom n text blocks and, when n > 0, the word/position
  // embeddings; everything above is unfrozen. Throws unless
  // 0 <= n < text_layers.
  void set_frozen_layers(int n_frozen);
  int frozen_layers() const { return config_.frozen_text_layers; }

  std::vector<ag::Parameter>& parameters() { return params_; }
  const std::vector<ag::Parameter>& parameters() const { return params_; }
  ag::Parameter& parameter(std::string_view name);
  const ag::Parameter& parameter(std::string_view name) const;

  // Parameters whose names start with "text." / "visual.".
  std::vector<const ag::Parameter*> text_parameters() const;
  std::vector<const ag::Parameter*> visual_parameters() const;
  // Names of the parameters that set_frozen_layers(n) freezes.
  std::vector<std::string> frozen_parameter_names(int n_frozen) const;

  // Keeps learnable GeM exponents above 1 after an optimizer step.
  void clamp_gem_exponents();

 private:
  struct BlockIndices {
    int ln1_g, ln1_b, qkv_w, qkv_b, out_w, out_b, ln2_g, ln2_b, fc1_w, fc1_b, fc2_w, fc2_b;
  };

  int add_param(std::string name, ag::Matrix value, bool decay);
  BlockIndices add_block(const std::string& prefix, std::uint64_t& stream);
  ag::Var run_block(ag::Graph& g, ag::Var x, const BlockIndices& b, bool causal) const;
  ag::Var bind(ag::Graph& g, int index) const { return g.param(params_[static_cast<std::size_t>(index)]); }
  void apply_freezing();

  EncoderConfig config_;
  int vocab_size_;
  std::vector<ag::Parameter> params_;

  int v_patch_w_, v_patch_b_, v_cls_, v_pos_, v_ln_pre_g_, v_ln_pre_b_, v_ln_post_g_,
      v_ln_post_b_, v_proj_, v_gem_q_;
  std::vector<BlockIndices> v_blocks_;
  int t_embed_, t_pos_, t_ln_g_, t_ln_b_, t_proj_, t_gem_q_;
  std::vector<BlockIndices> t_blocks_;
};

}  // namespace tpsearch

#endif  // TPSEARCH_ENCODERS_H_
