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

// Command-line front end: data generation, text tooling, training,
// evaluation and run comparison.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "tpsearch/config.h"
#include "tpsearch/corpus.h"
#include "tpsearch/dapgen.h"
#include "tpsearch/midgen.h"
#include "tpsearch/textparse.h"
#include "tpsearch/trainer.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

tpsearch::AppConfig resolve_config(const std::string& path) {
  return tpsearch::load_config(path);
}

tpsearch::Lexicon resolve_lexicon(const std::string& path) {
  return path.empty() ? tpsearch::Lexicon::builtin() : tpsearch::Lexicon::load(path);
}

tpsearch::Dataset resolve_dataset(const std::string& data_dir,
                                  const tpsearch::CorpusConfig& corpus,
                                  std::uint64_t data_seed) {
  if (!data_dir.empty()) return tpsearch::load_dataset(data_dir);
  return tpsearch::generate_dataset(corpus, data_seed);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json evaluation_block(const tpsearch::Model& model, const tpsearch::Dataset& dataset,
                      std::uint64_t seed) {
  const auto split = tpsearch::split_dataset(dataset);
  const auto clean = tpsearch::evaluate_captions(model, dataset, split.test_captions);
  const auto degraded =
      tpsearch::evaluate_captions(model, dataset, split.test_captions, true, seed);
  json j = clean.to_json();
  j["degraded"] = degraded.to_json();
  j["R1_drop"] = clean.r1 - degraded.r1;
  j["queries"] = split.test_captions.size();
  j["gallery"] = dataset.images.size();
  return j;
}

int cmd_generate(const std::string& config_path, std::uint64_t seed, const std::string& out) {
  const auto cfg = resolve_config(config_path);
  const auto ds = tpsearch::generate_dataset(cfg.corpus, seed);
  tpsearch::save_dataset(ds, out);
  std::cout << "wrote " << ds.identities.size() << " identities, " << ds.images.size()
            << " images, " << ds.captions.size() << " captions to " << out << "\n";
  return 0;
}

int cmd_parse(const std::string& text, const std::string& lexicon_path) {
  const auto lex = resolve_lexicon(lexicon_path);
  for (const auto& p : tpsearch::parse_description(text, lex)) {
    std::cout << tpsearch::phrase_to_json(p).dump() << "\n";
  }
  return 0;
}

int cmd_mid(const std::string& text, const std::string& lexicon_path, const std::string& mode,
            int k, std::uint64_t seed) {
  const auto lex = resolve_lexicon(lexicon_path);
  const auto phrases = tpsearch::parse_description(text, lex);
  if (phrases.empty()) return 0;
  auto mids = tpsearch::enumerate_mids(phrases, text, tpsearch::parse_mid_mode(mode));
  if (k > 0) mids = tpsearch::sample_mids(mids, k, seed);
  for (const auto& m : mids) std::cout << tpsearch::mid_to_json(m).dump() << "\n";
  return 0;
}

int cmd_prompts(const std::string& text, const std::string& lexicon_path, int k,
                std::uint64_t seed) {
  const auto lex = resolve_lexicon(lexicon_path);
  auto prompts = tpsearch::generate_prompts(tpsearch::parse_description(text, lex));
  if (k > 0) prompts = tpsearch::sample_prompts(prompts, k, seed);
  for (const auto& p : prompts) std::cout << tpsearch::prompt_to_json(p).dump() << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& data_dir, std::uint64_t data_seed, const std::string& out,
              const std::string& resume) {
  auto cfg = resolve_config(config_path);
  if (seed) cfg.train.seed = *seed;
  const auto dataset = resolve_dataset(data_dir, cfg.corpus, data_seed);
  fs::create_directories(out);
  auto trainer = resume.empty() ? tpsearch::Trainer(cfg, dataset, out)
                                : tpsearch::Trainer::resume(resume, dataset, out);
  json resolved = trainer.config();
  write_json(fs::path(out) / "config.json", resolved);
  const auto t0 = std::chrono::steady_clock::now();
  while (trainer.state().epoch < trainer.config().train.epochs) {
    trainer.train_epoch();
    const auto& h = trainer.state().history;
    double mean = 0.0;
    const long n = trainer.steps_per_epoch();
    for (long i = 0; i < n; ++i) mean += h[h.size() - 1 - static_cast<std::size_t>(i)].losses.total;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cerr << "epoch " << trainer.state().epoch << "/" << trainer.config().train.epochs
              << " mean_loss " << std::setprecision(6) << mean / static_cast<double>(n)
              << " elapsed " << std::setprecision(4) << secs << "s\n";
  }
  trainer.save_checkpoint(fs::path(out) / "model.ckpt");
  json metrics = evaluation_block(trainer.model(), dataset, trainer.config().train.seed);
  metrics["run"] = fs::path(out).filename().string();
  metrics["config"] = resolved;
  metrics["data_seed"] = dataset.seed;
  write_json(fs::path(out) / "metrics.json", metrics);
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir,
             std::optional<std::uint64_t> data_seed, bool drop_phrase, std::uint64_t seed,
             const std::string& rankings_csv, const std::string& split_name) {
  tpsearch::AppConfig cfg;
  const auto model = tpsearch::load_model(ckpt, &cfg);
  const auto meta = tpsearch::read_checkpoint(ckpt).meta;
  const std::uint64_t ds_seed =
      data_seed.value_or(meta.value("dataset_seed", static_cast<std::uint64_t>(7)));
  const auto dataset = resolve_dataset(data_dir, cfg.corpus, ds_seed);
  const auto split = tpsearch::split_dataset(dataset);
  const std::vector<int>& queries =
      split_name == "train" ? split.train_captions : split.test_captions;
  std::vector<std::vector<int>> rankings;
  const auto report =
      tpsearch::evaluate_captions(model, dataset, queries, drop_phrase, seed, &rankings);
  if (!rankings_csv.empty()) {
    std::ofstream out(rankings_csv);
    out << "caption_id,query_identity,rank,image_id,image_identity\n";
    for (std::size_t q = 0; q < rankings.size(); ++q) {
      const auto& cap = dataset.captions[static_cast<std::size_t>(queries[q])];
      for (std::size_t r = 0; r < rankings[q].size(); ++r) {
        const auto& img = dataset.images[static_cast<std::size_t>(rankings[q][r])];
        out << cap.caption_id << ',' << cap.identity_id << ',' << r + 1 << ',' << img.image_id
            << ',' << img.identity_id << '\n';
      }
    }
  }
  json j = report.to_json();
  j["queries"] = queries.size();
  j["split"] = split_name;
  j["drop_phrase"] = drop_phrase;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_report(const std::string& runs_dir, const std::string& format) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(runs_dir)) {
    if (e.path().filename() == "metrics.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no metrics.json under " + runs_dir);
  struct Row {
    std::string run;
    json m;
  };
  std::vector<Row> rows;
  for (const auto& f : files) {
    std::ifstream in(f);
    json m = json::parse(in);
    rows.push_back({fs::relative(f.parent_path(), runs_dir).string(), std::move(m)});
  }
  const std::vector<std::string> head = {"run", "K_m", "K_p", "lambda0", "lambda1", "R1",
                                         "R5",  "R10", "mAP", "R1_degraded", "R1_drop"};
  auto cells = [](const Row& r) {
    const json& c = r.m.at("config");
    auto num = [](double v) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(4) << v;
      return os.str();
    };
    auto g = [](const json& j) {
      std::ostringstream os;
      os << j;
      return os.str();
    };
    return std::vector<std::string>{r.run,
                                    g(c.at("train").at("k_m")),
                                    g(c.at("train").at("k_p")),
                                    g(c.at("loss").at("lambda0")),
                                    g(c.at("loss").at("lambda1")),
                                    num(r.m.at("R1")),
                                    num(r.m.at("R5")),
                                    num(r.m.at("R10")),
                                    num(r.m.at("mAP")),
                                    num(r.m.at("degraded").at("R1")),
                                    num(r.m.at("R1_drop"))};
  };
  if (format == "csv") {
    for (std::size_t i = 0; i < head.size(); ++i) std::cout << (i ? "," : "") << head[i];
    std::cout << "\n";
    for (const auto& r : rows) {
      const auto c = cells(r);
      for (std::size_t i = 0; i < c.size(); ++i) std::cout << (i ? "," : "") << c[i];
      std::cout << "\n";
    }
  } else {
    std::cout << "|";
    for (const auto& h : head) std::cout << " " << h << " |";
    std::cout << "\n|";
    for (std::size_t i = 0; i < head.size(); ++i) std::cout << (i == 0 ? " --- |" : " ---: |");
    std::cout << "\n";
    for (const auto& r : rows) {
      std::cout << "|";
      for (const auto& c : cells(r)) std::cout << " " << c << " |";
      std::cout << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tpsearch: text-based person search on a synthetic attribute corpus"};
  app.require_subcommand(1);

  std::string config_path, out_dir, lexicon_path, text, mode = "adjective_and_phrase";
  std::string split_name = "test";
  std::string data_dir, ckpt, runs_dir, format = "markdown", rankings_csv, resume;
  std::uint64_t seed = 7, data_seed = 7, sample_seed = 0;
  std::optional<std::uint64_t> train_seed, eval_data_seed;
  int k = 0;
  bool drop_phrase = false;

  auto* gen = app.add_subcommand("generate-data", "Generate a synthetic corpus");
  gen->add_option("--config", config_path, "JSON config (corpus block is used)");
  gen->add_option("--seed", seed, "Corpus seed");
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* parse = app.add_subcommand("parse", "Extract attribute phrases from a description");
  parse->add_option("text", text, "Description")->required();
  parse->add_option("--lexicon", lexicon_path, "Lexicon JSON (default: builtin)");

  auto* mid = app.add_subcommand("mid", "List incomplete descriptions of a caption");
  mid->add_option("text", text, "Description")->required();
  mid->add_option("--lexicon", lexicon_path, "Lexicon JSON (default: builtin)");
  mid->add_option("--mode", mode, "adjective_and_phrase or full_component");
  mid->add_option("-k", k, "Sample k variants instead of listing all");
  mid->add_option("--seed", sample_seed, "Sampling seed");

  auto* prompts = app.add_subcommand("prompts", "List attribute prompts of a caption");
  prompts->add_option("text", text, "Description")->required();
  prompts->add_option("--lexicon", lexicon_path, "Lexicon JSON (default: builtin)");
  prompts->add_option("-k", k, "Sample k prompts instead of listing all");
  prompts->add_option("--seed", sample_seed, "Sampling seed");

  auto* train = app.add_subcommand("train", "Train a model");
  train->add_option("--config", config_path, "JSON config with corpus/encoder/loss/train");
  train->add_option("--seed", train_seed, "Training seed (overrides train.seed)");
  train->add_option("--data", data_dir, "Corpus directory (default: generate)");
  train->add_option("--data-seed", data_seed, "Seed for a generated corpus");
  train->add_option("--out", out_dir, "Run directory")->required();
  train->add_option("--resume", resume, "Checkpoint to resume from");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out captions");
  eval->add_option("--ckpt", ckpt, "Checkpoint file")->required();
  eval->add_option("--data", data_dir, "Corpus directory (default: regenerate)");
  eval->add_option("--data-seed", eval_data_seed, "Seed for a regenerated corpus");
  eval->add_flag("--drop-phrase", drop_phrase, "Drop one attribute phrase per query");
  eval->add_option("--seed", sample_seed, "Seed for phrase dropping");
  eval->add_option("--rankings", rankings_csv, "Write per-query rankings to this CSV");
  eval->add_option("--split", split_name, "Query captions: test (held out) or train")
      ->check(CLI::IsMember({"test", "train"}));

  auto* report = app.add_subcommand("report", "Compare runs under a directory");
  report->add_option("--runs", runs_dir, "Directory holding run subdirectories")->required();
  report->add_option("--format", format, "markdown or csv")
      ->check(CLI::IsMember({"markdown", "csv"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_generate(config_path, seed, out_dir);
    if (*parse) return cmd_parse(text, lexicon_path);
    if (*mid) return cmd_mid(text, lexicon_path, mode, k, sample_seed);
    if (*prompts) return cmd_prompts(text, lexicon_path, k, sample_seed);
    if (*train) return cmd_train(config_path, train_seed, data_dir, data_seed, out_dir, resume);
    if (*eval) {
      return cmd_eval(ckpt, data_dir, eval_data_seed, drop_phrase, sample_seed, rankings_csv,
                      split_name);
    }
    if (*report) return cmd_report(runs_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
