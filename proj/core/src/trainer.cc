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

#include "tpsearch/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include "tpsearch/dapgen.h"
#include "tpsearch/midgen.h"
#include "tpsearch/seeds.h"

namespace tpsearch {
namespace {

constexpr int kCheckpointVersion = 1;

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw std::runtime_error("checkpoint: corrupt rng state");
}

nlohmann::json record_to_json(const StepRecord& r) {
  return {{"step", r.step},
          {"epoch", r.epoch},
          {"lr", r.lr},
          {"L_cls", r.losses.cls},
          {"L_align", r.losses.align},
          {"L_int", r.losses.integrity},
          {"L_pmt", r.losses.prompt},
          {"total", r.losses.total}};
}

StepRecord record_from_json(const nlohmann::json& j) {
  StepRecord r;
  r.step = j.at("step").get<long>();
  r.epoch = j.at("epoch").get<int>();
  r.lr = j.at("lr").get<double>();
  r.losses.cls = j.at("L_cls").get<double>();
  r.losses.align = j.at("L_align").get<double>();
  r.losses.integrity = j.at("L_int").get<double>();
  r.losses.prompt = j.at("L_pmt").get<double>();
  r.losses.total = j.at("total").get<double>();
  return r;
}

ag::Matrix stack_rows(const std::vector<Eigen::RowVectorXd>& rows, int cols) {
  ag::Matrix m(static_cast<ag::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<ag::Index>(i)) = rows[i];
  return m;
}

ag::Var encode_texts_on(ag::Graph& g, const DualEncoder& enc,
                        const std::vector<std::vector<int>>& tokens) {
  std::vector<ag::Var> rows;
  rows.reserve(tokens.size());
  for (const auto& t : tokens) rows.push_back(enc.encode_text(g, t).concat);
  return ag::vstack(rows);
}

void restore_parameters(std::span<ag::Parameter* const> params, const Checkpoint& ckpt) {
  for (ag::Parameter* p : params) {
    const ag::Matrix& m = ckpt.tensor(p->name);
    if (m.rows() != p->value.rows() || m.cols() != p->value.cols()) {
      throw std::runtime_error("checkpoint: shape mismatch for " + p->name);
    }
    p->value = m;
    p->zero_grad();
  }
}

}  // namespace

nlohmann::json Batch::describe() const {
  nlohmann::json j;
  j["caption_indices"] = caption_indices;
  j["labels"] = labels;
  j["captions"] = caption_texts;
  j["mids"] = mid_texts;
  j["mid_owner"] = mid_owner;
  j["prompts"] = prompt_texts;
  j["prompt_owner"] = prompt_owner;
  j["prompt_groups"] = prompt_groups;
  return j;
}

Batch assemble_batch(const Dataset& dataset, std::span<const int> caption_indices, int k_m,
                     int k_p, std::uint64_t seed, const Tokenizer& tokenizer, MidMode mode,
                     std::optional<double> noise_sigma) {
  Batch b;
  for (std::size_t row = 0; row < caption_indices.size(); ++row) {
    const int ci = caption_indices[row];
    const CaptionRecord& cap = dataset.captions.at(static_cast<std::size_t>(ci));
    const ImageSpec& img = dataset.images.at(static_cast<std::size_t>(cap.image_id));
    b.caption_indices.push_back(ci);
    b.labels.push_back(cap.identity_id);
    if (noise_sigma) {
      const Identity& ident = dataset.identities.at(static_cast<std::size_t>(cap.identity_id));
      b.images.push_back(render_image(ident, *noise_sigma,
                                      derive_seed(seed, "noise", {static_cast<std::uint64_t>(ci)}),
                                      dataset.config.layout, dataset.config.gender_bias)
                             .patch_grid);
    } else {
      b.images.push_back(img.patch_grid);
    }
    b.caption_texts.push_back(cap.text);
    b.caption_tokens.push_back(tokenizer.encode(cap.text));

    const int owner = static_cast<int>(row);
    if (k_m > 0 && !cap.phrases.empty()) {
      const auto variants = enumerate_mids(cap.phrases, cap.text, mode, cap.caption_id);
      for (const MIDVariant& m :
           sample_mids(variants, k_m, derive_seed(seed, "mid", {static_cast<std::uint64_t>(ci)}))) {
        b.mid_texts.push_back(m.text);
        b.mid_tokens.push_back(tokenizer.encode(m.text));
        b.mid_owner.push_back(owner);
      }
    }
    if (k_p > 0 && !cap.phrases.empty()) {
      const auto prompts = generate_prompts(cap.phrases, cap.caption_id);
      for (const Prompt& p : sample_prompts(
               prompts, k_p, derive_seed(seed, "prompt", {static_cast<std::uint64_t>(ci)}))) {
        b.prompt_texts.push_back(p.text);
        b.prompt_tokens.push_back(tokenizer.encode(p.text));
        b.prompt_owner.push_back(owner);
        b.prompt_groups.push_back(p.group_key);
      }
    }
  }
  return b;
}

double lr_at(long step, double base_lr, long warmup_steps, long total_steps) {
  if (step < 0) throw std::invalid_argument("lr_at: negative step");
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  const long decay_steps = total_steps - warmup_steps;
  if (decay_steps <= 0) return base_lr;
  const double progress = std::clamp(
      static_cast<double>(step - warmup_steps) / static_cast<double>(decay_steps), 0.0, 1.0);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

Model Model::create(const EncoderConfig& config, const Lexicon& lexicon, int n_classes,
                    std::uint64_t seed) {
  Tokenizer tok = Tokenizer::for_lexicon(lexicon, config.max_len);
  DualEncoder enc(config, tok.vocab_size(), derive_seed(seed, "encoder"));
  ClassifierWeights heads =
      ClassifierWeights::init(n_classes, enc.feature_dim(), derive_seed(seed, "heads"));
  return Model{std::move(tok), std::move(enc), std::move(heads)};
}

std::vector<ag::Parameter*> Model::parameters() {
  std::vector<ag::Parameter*> out;
  for (ag::Parameter& p : encoder.parameters()) out.push_back(&p);
  out.push_back(&heads.w_v);
  out.push_back(&heads.w_t);
  return out;
}

std::vector<const ag::Parameter*> Model::parameters() const {
  std::vector<const ag::Parameter*> out;
  for (const ag::Parameter& p : encoder.parameters()) out.push_back(&p);
  out.push_back(&heads.w_v);
  out.push_back(&heads.w_t);
  return out;
}

ag::Matrix embed_images(const Model& model, std::span<const ag::Matrix> grids) {
  std::vector<Eigen::RowVectorXd> rows;
  rows.reserve(grids.size());
  for (const ag::Matrix& grid : grids) {
    ag::Graph g(false);
    rows.emplace_back(model.encoder.encode_image(g, grid).concat.value());
  }
  return stack_rows(rows, model.encoder.feature_dim());
}

ag::Matrix embed_texts(const Model& model, std::span<const std::string> texts) {
  std::vector<Eigen::RowVectorXd> rows;
  rows.reserve(texts.size());
  for (const std::string& text : texts) {
    ag::Graph g(false);
    rows.emplace_back(model.encoder.encode_text(g, model.tokenizer.encode(text)).concat.value());
  }
  return stack_rows(rows, model.encoder.feature_dim());
}

BatchForward forward_batch(ag::Graph& graph, const Model& model, const Batch& batch,
                           const LossParams& params) {
  BatchForward out;
  BatchFeatures& f = out.features;
  std::vector<ag::Var> image_rows;
  image_rows.reserve(batch.images.size());
  for (const ag::Matrix& grid : batch.images) {
    image_rows.push_back(model.encoder.encode_image(graph, grid).concat);
  }
  f.v = ag::vstack(image_rows);
  f.t = encode_texts_on(graph, model.encoder, batch.caption_tokens);
  f.labels = batch.labels;
  if (!batch.mid_tokens.empty()) {
    f.t_mid = encode_texts_on(graph, model.encoder, batch.mid_tokens);
    f.mid_owner = batch.mid_owner;
  }
  if (!batch.prompt_tokens.empty()) {
    // Prompt features never carry gradient, so they are built on a side
    // graph and enter the loss as constants.
    ag::Graph side(false);
    ag::Var pmt = encode_texts_on(side, model.encoder, batch.prompt_tokens);
    f.t_pmt = graph.constant(pmt.value());
    f.pmt_owner = batch.prompt_owner;
    f.pmt_group = batch.prompt_groups;
  }
  out.terms = compute_losses(f, graph.param(model.heads.w_v), graph.param(model.heads.w_t), params);
  return out;
}

void AdamW::step(std::span<ag::Parameter* const> params, double lr) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const ag::Parameter* p : params) {
      m_.push_back(ag::Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(ag::Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ag::Parameter& p = *params[i];
    if (p.frozen) continue;
    if (p.decay && weight_decay_ != 0.0) p.value *= 1.0 - lr * weight_decay_;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p.grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    p.value.array() -=
        lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

Trainer::Trainer(AppConfig config, const Dataset& dataset, std::filesystem::path run_dir)
    : config_(std::move(config)),
      dataset_(&dataset),
      run_dir_(std::move(run_dir)),
      split_(split_dataset(dataset)),
      model_(Model::create(config_.encoder, dataset.lexicon,
                           static_cast<int>(dataset.identities.size()), config_.train.seed)),
      optimizer_(config_.train.adam_beta1, config_.train.adam_beta2, config_.train.adam_eps,
                 config_.train.weight_decay),
      sampler_rng_(derive_seed(config_.train.seed, "sampler")) {
  config_.train.validate();
  config_.loss.n_classes = static_cast<int>(dataset.identities.size());
  config_.loss.validate();
  if (split_.train_captions.empty()) throw std::invalid_argument("trainer: empty train split");
  if (!run_dir_.empty()) std::filesystem::create_directories(run_dir_);
}

long Trainer::steps_per_epoch() const {
  const long n = static_cast<long>(split_.train_captions.size());
  const long b = config_.train.batch_size;
  return (n + b - 1) / b;
}

std::vector<std::vector<int>> Trainer::epoch_batches() {
  std::vector<int> order;
  if (config_.train.sampler == SamplerKind::kShuffle) {
    order = split_.train_captions;
    std::shuffle(order.begin(), order.end(), sampler_rng_);
  } else {
    // Identity-balanced: chunks of captions_per_identity captions of one
    // identity, shuffled so each batch mixes many identities.
    std::map<int, std::vector<int>> by_identity;
    for (int ci : split_.train_captions) {
      by_identity[dataset_->captions[static_cast<std::size_t>(ci)].identity_id].push_back(ci);
    }
    std::vector<std::vector<int>> chunks;
    const auto per = static_cast<std::size_t>(config_.train.captions_per_identity);
    for (auto& [id, caps] : by_identity) {
      std::shuffle(caps.begin(), caps.end(), sampler_rng_);
      for (std::size_t i = 0; i < caps.size(); i += per) {
        chunks.emplace_back(caps.begin() + static_cast<long>(i),
                            caps.begin() + static_cast<long>(std::min(caps.size(), i + per)));
      }
    }
    std::shuffle(chunks.begin(), chunks.end(), sampler_rng_);
    for (const auto& c : chunks) order.insert(order.end(), c.begin(), c.end());
  }
  std::vector<std::vector<int>> batches;
  const auto b = static_cast<std::size_t>(config_.train.batch_size);
  for (std::size_t i = 0; i < order.size(); i += b) {
    batches.emplace_back(order.begin() + static_cast<long>(i),
                         order.begin() + static_cast<long>(std::min(order.size(), i + b)));
  }
  return batches;
}

StepRecord Trainer::train_step(const Batch& batch) {
  const TrainConfig& tc = config_.train;
  ag::Graph graph;
  BatchForward fwd = forward_batch(graph, model_, batch, config_.loss);
  StepRecord rec;
  rec.step = state_.step;
  rec.epoch = state_.epoch;
  rec.lr = lr_at(state_.step, tc.base_lr, tc.warmup_epochs * steps_per_epoch(), total_steps());
  rec.losses = fwd.terms.values();
  const LossComponents& l = rec.losses;
  if (!std::isfinite(l.total) || !std::isfinite(l.cls) || !std::isfinite(l.align) ||
      !std::isfinite(l.integrity) || !std::isfinite(l.prompt)) {
    nlohmann::json dump = batch.describe();
    dump["step"] = rec.step;
    dump["losses"] = record_to_json(rec);
    std::string where = "stderr";
    if (!run_dir_.empty()) {
      const auto path = run_dir_ / "nonfinite_batch.json";
      std::ofstream(path) << dump.dump(2) << "\n";
      where = path.string();
    } else {
      std::cerr << dump.dump(2) << "\n";
    }
    throw NonFiniteLossError("non-finite loss at step " + std::to_string(rec.step) +
                             "; batch dumped to " + where);
  }
  graph.backward(fwd.terms.total);
  std::vector<ag::Parameter*> params = model_.parameters();
  for (ag::Parameter* p : params) {
    const ag::Matrix* g = graph.param_grad(*p);
    if (g != nullptr) {
      p->grad = *g;
    } else {
      p->zero_grad();
    }
  }
  optimizer_.step(params, rec.lr);
  model_.encoder.clamp_gem_exponents();
  ++state_.step;
  state_.history.push_back(rec);
  write_loss_row(rec);
  return rec;
}

void Trainer::write_loss_row(const StepRecord& rec) const {
  if (run_dir_.empty()) return;
  const auto path = run_dir_ / "losses.csv";
  const bool fresh = rec.step == 0 || !std::filesystem::exists(path);
  std::ofstream out(path, fresh ? std::ios::trunc : std::ios::app);
  if (fresh) out << "step,epoch,lr,L_cls,L_align,L_int,L_pmt,total\n";
  out << std::setprecision(17) << rec.step << ',' << rec.epoch << ',' << rec.lr << ','
      << rec.losses.cls << ',' << rec.losses.align << ',' << rec.losses.integrity << ','
      << rec.losses.prompt << ',' << rec.losses.total << '\n';
}

void Trainer::train_epoch() {
  const TrainConfig& tc = config_.train;
  const auto batches = epoch_batches();
  const std::optional<double> sigma =
      tc.fresh_noise ? std::optional<double>(dataset_->config.noise_sigma) : std::nullopt;
  for (const auto& indices : batches) {
    const std::uint64_t seed =
        derive_seed(tc.seed, "batch", {static_cast<std::uint64_t>(state_.step)});
    const Batch batch = assemble_batch(*dataset_, indices, tc.k_m, tc.k_p, seed,
                                       model_.tokenizer, tc.mid_mode, sigma);
    train_step(batch);
  }
  ++state_.epoch;
  if (!run_dir_.empty()) {
    std::ostringstream name;
    name << "epoch_" << std::setw(3) << std::setfill('0') << state_.epoch << ".ckpt";
    const auto dir = run_dir_ / "checkpoints";
    std::filesystem::create_directories(dir);
    save_checkpoint(dir / name.str());
    save_checkpoint(run_dir_ / "last.ckpt");
    prune_checkpoints();
  }
}

void Trainer::train() {
  while (state_.epoch < config_.train.epochs) train_epoch();
}

void Trainer::prune_checkpoints() const {
  const int keep = config_.train.keep_checkpoints;
  if (keep <= 0) return;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(run_dir_ / "checkpoints")) {
    if (e.path().extension() == ".ckpt") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (std::size_t i = 0; i + static_cast<std::size_t>(keep) < files.size(); ++i) {
    std::filesystem::remove(files[i]);
  }
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ckpt;
  nlohmann::json history = nlohmann::json::array();
  for (const StepRecord& r : state_.history) history.push_back(record_to_json(r));
  nlohmann::json config_json = config_;
  ckpt.meta = {{"version", kCheckpointVersion},
               {"config", config_json},
               {"dataset_seed", dataset_->seed},
               {"step", state_.step},
               {"epoch", state_.epoch},
               {"sampler_rng", rng_to_string(sampler_rng_)},
               {"adam_steps", optimizer_.steps()},
               {"vocabulary", model_.tokenizer.words()},
               {"history", history}};
  for (const ag::Parameter* p : model_.parameters()) ckpt.tensors.emplace_back(p->name, p->value);
  const AdamW& opt = optimizer_;
  const auto params = model_.parameters();
  for (std::size_t i = 0; i < opt.first_moments().size(); ++i) {
    ckpt.tensors.emplace_back("adam.m/" + params[i]->name, opt.first_moments()[i]);
    ckpt.tensors.emplace_back("adam.v/" + params[i]->name, opt.second_moments()[i]);
  }
  return ckpt;
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  write_checkpoint(path, make_checkpoint());
}

Trainer Trainer::resume(const std::filesystem::path& checkpoint, const Dataset& dataset,
                        std::filesystem::path run_dir) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  if (ckpt.meta.value("version", 0) != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  Trainer t(config_from_json(ckpt.meta.at("config")), dataset, std::move(run_dir));
  if (t.model_.tokenizer.words() !=
      ckpt.meta.at("vocabulary").get<std::vector<std::string>>()) {
    throw std::runtime_error("checkpoint: vocabulary does not match dataset lexicon");
  }
  std::vector<ag::Parameter*> params = t.model_.parameters();
  restore_parameters(params, ckpt);
  const long adam_steps = ckpt.meta.at("adam_steps").get<long>();
  t.optimizer_.set_steps(adam_steps);
  if (adam_steps > 0) {
    for (ag::Parameter* p : params) {
      t.optimizer_.first_moments().push_back(ckpt.tensor("adam.m/" + p->name));
      t.optimizer_.second_moments().push_back(ckpt.tensor("adam.v/" + p->name));
    }
  }
  rng_from_string(t.sampler_rng_, ckpt.meta.at("sampler_rng").get<std::string>());
  t.state_.step = ckpt.meta.at("step").get<long>();
  t.state_.epoch = ckpt.meta.at("epoch").get<int>();
  for (const auto& r : ckpt.meta.at("history")) t.state_.history.push_back(record_from_json(r));
  return t;
}

Model load_model(const std::filesystem::path& checkpoint, AppConfig* config_out) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  AppConfig config = config_from_json(ckpt.meta.at("config"));
  Tokenizer tok(ckpt.meta.at("vocabulary").get<std::vector<std::string>>(),
                config.encoder.max_len);
  DualEncoder enc(config.encoder, tok.vocab_size(), 0);
  const ag::Matrix& w_v = ckpt.tensor("head.cls_visual");
  ClassifierWeights heads =
      ClassifierWeights::init(static_cast<int>(w_v.rows()), enc.feature_dim(), 0);
  Model model{std::move(tok), std::move(enc), std::move(heads)};
  restore_parameters(model.parameters(), ckpt);
  if (config_out != nullptr) *config_out = config;
  return model;
}

RetrievalReport evaluate_captions(const Model& model, const Dataset& dataset,
                                  std::span<const int> caption_indices, bool drop_phrase,
                                  std::uint64_t seed, std::vector<std::vector<int>>* rankings) {
  RetrievalIndex index;
  std::vector<ag::Matrix> grids;
  for (const ImageSpec& img : dataset.images) {
    grids.push_back(img.patch_grid);
    index.gallery_labels.push_back(img.identity_id);
  }
  index.gallery = embed_images(model, grids);
  std::vector<std::string> texts;
  for (int ci : caption_indices) {
    const CaptionRecord& cap = dataset.captions.at(static_cast<std::size_t>(ci));
    texts.push_back(drop_phrase ? drop_one_phrase(cap.phrases, cap.text,
                                                  derive_seed(seed, "drop",
                                                              {static_cast<std::uint64_t>(ci)}))
                                : cap.text);
    index.query_labels.push_back(cap.identity_id);
  }
  index.queries = embed_texts(model, texts);
  if (rankings != nullptr) {
    rankings->clear();
    for (ag::Index q = 0; q < index.queries.rows(); ++q) {
      rankings->push_back(rank(index.queries.row(q), index.gallery));
    }
  }
  return evaluate_retrieval(index);
}

}  // namespace tpsearch
