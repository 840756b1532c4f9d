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

#include "tpsearch/encoders.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "tpsearch/seeds.h"
#include "tpsearch/tokenizer.h"

namespace tpsearch {
namespace {

ag::Matrix normal_matrix(ag::Index rows, ag::Index cols, double stddev,
                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  ag::Matrix m(rows, cols);
  for (ag::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0) {
    throw std::invalid_argument("encoder: embed_dim must be a positive multiple of heads");
  }
  if (visual_layers < 1 || text_layers < 1) {
    throw std::invalid_argument("encoder: need at least one layer per tower");
  }
  if (frozen_text_layers < 0 || frozen_text_layers >= text_layers) {
    throw std::invalid_argument("encoder: frozen_text_layers must be in [0, text_layers)");
  }
  if (!(gem_q > 1.0)) throw std::invalid_argument("encoder: gem_q must be > 1");
  if (patch_count < 1 || patch_dim < 1 || max_len < 3 || mlp_ratio < 1) {
    throw std::invalid_argument("encoder: bad patch or sequence sizes");
  }
}

void to_json(nlohmann::json& j, const EncoderConfig& c) {
  j = {{"embed_dim", c.embed_dim},
       {"visual_layers", c.visual_layers},
       {"text_layers", c.text_layers},
       {"heads", c.heads},
       {"mlp_ratio", c.mlp_ratio},
       {"patch_count", c.patch_count},
       {"patch_dim", c.patch_dim},
       {"max_len", c.max_len},
       {"frozen_text_layers", c.frozen_text_layers},
       {"gem_q", c.gem_q},
       {"gem_learnable", c.gem_learnable},
       {"gem_eps", c.gem_eps},
       {"positional_embeddings", c.positional_embeddings}};
}

void from_json(const nlohmann::json& j, EncoderConfig& c) {
  const EncoderConfig d;
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.visual_layers = j.value("visual_layers", d.visual_layers);
  c.text_layers = j.value("text_layers", d.text_layers);
  c.heads = j.value("heads", d.heads);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.patch_count = j.value("patch_count", d.patch_count);
  c.patch_dim = j.value("patch_dim", d.patch_dim);
  c.max_len = j.value("max_len", d.max_len);
  c.frozen_text_layers = j.value("frozen_text_layers", d.frozen_text_layers);
  c.gem_q = j.value("gem_q", d.gem_q);
  c.gem_learnable = j.value("gem_learnable", d.gem_learnable);
  c.gem_eps = j.value("gem_eps", d.gem_eps);
  c.positional_embeddings = j.value("positional_embeddings", d.positional_embeddings);
}

Eigen::RowVectorXd gem_pool(const ag::Matrix& tokens, double q, double eps) {
  if (tokens.rows() == 0) throw std::invalid_argument("gem_pool: no tokens");
  if (q < 1.0) throw std::invalid_argument("gem_pool: q must be >= 1");
  const ag::Matrix powered = tokens.cwiseMax(eps).array().pow(q).matrix();
  return powered.colwise().mean().array().pow(1.0 / q).matrix();
}

DualEncoder::DualEncoder(const EncoderConfig& config, int vocab_size,
                         std::uint64_t init_seed)
    : config_(config), vocab_size_(vocab_size) {
  config_.validate();
  if (vocab_size_ < Tokenizer::kFirstWordId) {
    throw std::invalid_argument("encoder: vocabulary too small");
  }
  const int d = config_.embed_dim;
  const double proj_std = 1.0 / std::sqrt(static_cast<double>(d));
  std::uint64_t stream = init_seed;
  auto next = [&stream] { return stream = splitmix64(stream); };

  v_patch_w_ = add_param("visual.patch_embed.weight",
                         normal_matrix(d, config_.patch_dim,
                                       1.0 / std::sqrt(config_.patch_dim), next()),
                         true);
  v_patch_b_ = add_param("visual.patch_embed.bias", ag::Matrix::Zero(1, d), false);
  v_cls_ = add_param("visual.class_token", normal_matrix(1, d, 0.02, next()), false);
  v_pos_ = add_param("visual.pos_embed",
                     normal_matrix(config_.patch_count + 1, d, 0.02, next()), false);
  v_ln_pre_g_ = add_param("visual.ln_pre.gamma", ag::Matrix::Ones(1, d), false);
  v_ln_pre_b_ = add_param("visual.ln_pre.beta", ag::Matrix::Zero(1, d), false);
  for (int i = 0; i < config_.visual_layers; ++i) {
    v_blocks_.push_back(add_block("visual.blocks." + std::to_string(i), stream));
  }
  v_ln_post_g_ = add_param("visual.ln_post.gamma", ag::Matrix::Ones(1, d), false);
  v_ln_post_b_ = add_param("visual.ln_post.beta", ag::Matrix::Zero(1, d), false);
  v_proj_ = add_param("visual.proj", normal_matrix(d, d, proj_std, next()), true);
  v_gem_q_ = add_param("visual.gem_q", ag::Matrix::Constant(1, 1, config_.gem_q), false);

  t_embed_ = add_param("text.token_embed", normal_matrix(vocab_size_, d, 0.02, next()), true);
  t_pos_ = add_param("text.pos_embed", normal_matrix(config_.max_len, d, 0.01, next()), false);
  for (int i = 0; i < config_.text_layers; ++i) {
    t_blocks_.push_back(add_block("text.blocks." + std::to_string(i), stream));
  }
  t_ln_g_ = add_param("text.ln_final.gamma", ag::Matrix::Ones(1, d), false);
  t_ln_b_ = add_param("text.ln_final.beta", ag::Matrix::Zero(1, d), false);
  t_proj_ = add_param("text.proj", normal_matrix(d, d, proj_std, next()), true);
  t_gem_q_ = add_param("text.gem_q", ag::Matrix::Constant(1, 1, config_.gem_q), false);

  apply_freezing();
}

int DualEncoder::add_param(std::string name, ag::Matrix value, bool decay) {
  params_.emplace_back(std::move(name), std::move(value), decay);
  return static_cast<int>(params_.size()) - 1;
}

DualEncoder::BlockIndices DualEncoder::add_block(const std::string& prefix,
                                                 std::uint64_t& stream) {
  const int d = config_.embed_dim;
  const int hidden = d * config_.mlp_ratio;
  const double std_in = 1.0 / std::sqrt(static_cast<double>(d));
  const double std_hidden = 1.0 / std::sqrt(static_cast<double>(hidden));
  auto next = [&stream] { return stream = splitmix64(stream); };
  BlockIndices b{};
  b.ln1_g = add_param(prefix + ".ln1.gamma", ag::Matrix::Ones(1, d), false);
  b.ln1_b = add_param(prefix + ".ln1.beta", ag::Matrix::Zero(1, d), false);
  b.qkv_w = add_param(prefix + ".attn.qkv.weight", normal_matrix(3 * d, d, std_in, next()), true);
  b.qkv_b = add_param(prefix + ".attn.qkv.bias", ag::Matrix::Zero(1, 3 * d), false);
  b.out_w = add_param(prefix + ".attn.out.weight",
                      normal_matrix(d, d, std_in / std::sqrt(2.0 * config_.text_layers), next()),
                      true);
  b.out_b = add_param(prefix + ".attn.out.bias", ag::Matrix::Zero(1, d), false);
  b.ln2_g = add_param(prefix + ".ln2.gamma", ag::Matrix::Ones(1, d), false);
  b.ln2_b = add_param(prefix + ".ln2.beta", ag::Matrix::Zero(1, d), false);
  b.fc1_w = add_param(prefix + ".mlp.fc1.weight", normal_matrix(hidden, d, std_in, next()), true);
  b.fc1_b = add_param(prefix + ".mlp.fc1.bias", ag::Matrix::Zero(1, hidden), false);
  b.fc2_w = add_param(prefix + ".mlp.fc2.weight",
                      normal_matrix(d, hidden, std_hidden / std::sqrt(2.0 * config_.text_layers),
                                    next()),
                      true);
  b.fc2_b = add_param(prefix + ".mlp.fc2.bias", ag::Matrix::Zero(1, d), false);
  return b;
}

ag::Var DualEncoder::run_block(ag::Graph& g, ag::Var x, const BlockIndices& b,
                               bool causal) const {
  ag::Var h = ag::layer_norm(x, bind(g, b.ln1_g), bind(g, b.ln1_b));
  ag::Var qkv = ag::linear(h, bind(g, b.qkv_w), bind(g, b.qkv_b));
  ag::Var attn = ag::attention(qkv, config_.heads, causal);
  x = ag::add(x, ag::linear(attn, bind(g, b.out_w), bind(g, b.out_b)));
  h = ag::layer_norm(x, bind(g, b.ln2_g), bind(g, b.ln2_b));
  ag::Var m = ag::quick_gelu(ag::linear(h, bind(g, b.fc1_w), bind(g, b.fc1_b)));
  return ag::add(x, ag::linear(m, bind(g, b.fc2_w), bind(g, b.fc2_b)));
}

EmbeddingOutputs DualEncoder::encode_image(ag::Graph& g, const ag::Matrix& grid) const {
  if (grid.rows() != config_.patch_count || grid.cols() != config_.patch_dim) {
    throw std::invalid_argument("encode_image: grid is " + std::to_string(grid.rows()) + "x" +
                                std::to_string(grid.cols()) + ", expected " +
                                std::to_string(config_.patch_count) + "x" +
                                std::to_string(config_.patch_dim));
  }
  ag::Var patches = ag::linear(g.constant(grid), bind(g, v_patch_w_), bind(g, v_patch_b_));
  ag::Var parts[] = {bind(g, v_cls_), patches};
  ag::Var x = ag::vstack(parts);
  if (config_.positional_embeddings) x = ag::add(x, bind(g, v_pos_));
  x = ag::layer_norm(x, bind(g, v_ln_pre_g_), bind(g, v_ln_pre_b_));
  for (const auto& b : v_blocks_) x = run_block(g, x, b, false);
  x = ag::layer_norm(x, bind(g, v_ln_post_g_), bind(g, v_ln_post_b_));

  EmbeddingOutputs out;
  out.token_features = x;
  ag::Var proj = bind(g, v_proj_);
  out.global = ag::matmul(ag::slice_rows(x, 0, 1), proj);
  out.pooled = ag::matmul(
      ag::gem_pool(ag::slice_rows(x, 1, config_.patch_count), bind(g, v_gem_q_),
                   config_.gem_eps),
      proj);
  out.concat = ag::hcat(out.global, out.pooled);
  return out;
}

EmbeddingOutputs DualEncoder::encode_text(ag::Graph& g, std::span<const int> token_ids) const {
  std::size_t end = token_ids.size();
  while (end > 0 && token_ids[end - 1] == Tokenizer::kPad) --end;
  if (end == 0 || token_ids[0] != Tokenizer::kSot) {
    throw std::invalid_argument("encode_text: sequence must start with SOT");
  }
  std::size_t eot = 1;
  while (eot < end && token_ids[eot] != Tokenizer::kEot) ++eot;
  if (eot == end) throw std::invalid_argument("encode_text: missing EOT");
  const auto n = static_cast<ag::Index>(eot + 1);
  if (n > config_.max_len) throw std::invalid_argument("encode_text: sequence exceeds max_len");
  const ag::Index words = n - 2;
  if (words < 1) throw std::invalid_argument("encode_text: no word tokens");
  for (ag::Index i = 0; i < n; ++i) {
    if (token_ids[static_cast<std::size_t>(i)] < 0 ||
        token_ids[static_cast<std::size_t>(i)] >= vocab_size_) {
      throw std::invalid_argument("encode_text: token id out of vocabulary");
    }
  }

  ag::Var x = ag::gather_rows(bind(g, t_embed_), token_ids.first(static_cast<std::size_t>(n)));
  if (config_.positional_embeddings) x = ag::add(x, ag::slice_rows(bind(g, t_pos_), 0, n));
  for (const auto& b : t_blocks_) x = run_block(g, x, b, true);
  x = ag::layer_norm(x, bind(g, t_ln_g_), bind(g, t_ln_b_));

  EmbeddingOutputs out;
  out.token_features = x;
  ag::Var proj = bind(g, t_proj_);
  out.global = ag::matmul(ag::slice_rows(x, n - 1, 1), proj);
  out.pooled = ag::matmul(
      ag::gem_pool(ag::slice_rows(x, 1, words), bind(g, t_gem_q_), config_.gem_eps), proj);
  out.concat = ag::hcat(out.global, out.pooled);
  return out;
}

std::vector<std::string> DualEncoder::frozen_parameter_names(int n_frozen) const {
  std::vector<std::string> names;
  if (n_frozen <= 0) return names;
  names = {"text.token_embed", "text.pos_embed"};
  for (int i = 0; i < n_frozen; ++i) {
    const std::string prefix = "text.blocks." + std::to_string(i) + ".";
    for (const auto& p : params_) {
      if (p.name.starts_with(prefix)) names.push_back(p.name);
    }
  }
  return names;
}

void DualEncoder::set_frozen_layers(int n_frozen) {
  if (n_frozen < 0 || n_frozen >= config_.text_layers) {
    throw std::invalid_argument("set_frozen_layers: need 0 <= n < " +
                                std::to_string(config_.text_layers));
  }
  config_.frozen_text_layers = n_frozen;
  apply_freezing();
}

void DualEncoder::apply_freezing() {
  const auto frozen = frozen_parameter_names(config_.frozen_text_layers);
  for (auto& p : params_) {
    if (p.name.ends_with("gem_q")) {
      p.frozen = !config_.gem_learnable;
    } else {
      p.frozen = std::find(frozen.begin(), frozen.end(), p.name) != frozen.end();
    }
  }
}

ag::Parameter& DualEncoder::parameter(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

const ag::Parameter& DualEncoder::parameter(std::string_view name) const {
  return const_cast<DualEncoder*>(this)->parameter(name);
}

std::vector<const ag::Parameter*> DualEncoder::text_parameters() const {
  std::vector<const ag::Parameter*> out;
  for (const auto& p : params_) {
    if (p.name.starts_with("text.")) out.push_back(&p);
  }
  return out;
}

std::vector<const ag::Parameter*> DualEncoder::visual_parameters() const {
  std::vector<const ag::Parameter*> out;
  for (const auto& p : params_) {
    if (p.name.starts_with("visual.")) out.push_back(&p);
  }
  return out;
}

void DualEncoder::clamp_gem_exponents() {
  for (int idx : {v_gem_q_, t_gem_q_}) {
    auto& q = params_[static_cast<std::size_t>(idx)].value(0, 0);
    q = std::max(q, 1.0 + 1e-3);
  }
}

}  // namespace tpsearch
