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

#include "tpsearch/midgen.h"

#include <random>
#include <stdexcept>

#include "tpsearch/caption_render.h"
#include "tpsearch/sampling.h"
#include "tpsearch/seeds.h"

namespace tpsearch {
namespace {

std::vector<PhraseState> allowed_states(const AttributePhrase& p, MidMode mode) {
  if (p.adjectives.empty()) return {PhraseState::kFull, PhraseState::kDropped};
  if (mode == MidMode::kFullComponent) {
    return {PhraseState::kFull, PhraseState::kNounOnly, PhraseState::kAdjectiveOnly,
            PhraseState::kDropped};
  }
  return {PhraseState::kFull, PhraseState::kNounOnly, PhraseState::kDropped};
}

}  // namespace

std::string_view state_key(PhraseState state) {
  switch (state) {
    case PhraseState::kFull:
      return "full";
    case PhraseState::kNounOnly:
      return "noun_only";
    case PhraseState::kAdjectiveOnly:
      return "adjective_only";
    case PhraseState::kDropped:
      return "dropped";
  }
  return "unknown";
}

std::string_view mid_mode_key(MidMode mode) {
  return mode == MidMode::kFullComponent ? "full_component" : "adjective_and_phrase";
}

MidMode parse_mid_mode(std::string_view key) {
  if (key == "adjective_and_phrase") return MidMode::kAdjectiveAndPhrase;
  if (key == "full_component") return MidMode::kFullComponent;
  throw std::invalid_argument("unknown MID mode '" + std::string(key) + "'");
}

int mid_template_index(std::string_view caption) {
  return static_cast<int>(fnv1a64(caption) % kCaptionTemplateCount);
}

std::string render_with_states(std::span<const AttributePhrase> phrases,
                               std::span<const PhraseState> states, int template_index) {
  if (phrases.size() != states.size()) {
    throw std::invalid_argument("render_with_states: state count mismatch");
  }
  std::vector<PhraseParts> parts;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    const AttributePhrase& p = phrases[i];
    switch (states[i]) {
      case PhraseState::kFull:
        parts.push_back({p.adjectives, p.noun, p.noun_category});
        break;
      case PhraseState::kNounOnly:
        parts.push_back({{}, p.noun, p.noun_category});
        break;
      case PhraseState::kAdjectiveOnly:
        parts.push_back({p.adjectives, "", p.noun_category});
        break;
      case PhraseState::kDropped:
        break;
    }
  }
  return render_sentence(parts, template_index);
}

std::vector<MIDVariant> enumerate_mids(std::span<const AttributePhrase> phrases,
                                       std::string_view caption, MidMode mode,
                                       int caption_id) {
  if (phrases.empty()) throw std::invalid_argument("enumerate_mids: no phrases");
  std::vector<std::vector<PhraseState>> options;
  for (const auto& p : phrases) options.push_back(allowed_states(p, mode));

  const int tmpl = mid_template_index(caption);
  std::vector<MIDVariant> out;
  std::vector<std::size_t> digit(phrases.size(), 0);
  std::vector<PhraseState> states(phrases.size());
  while (true) {
    bool all_full = true;
    bool all_dropped = true;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      states[i] = options[i][digit[i]];
      all_full = all_full && states[i] == PhraseState::kFull;
      all_dropped = all_dropped && states[i] == PhraseState::kDropped;
    }
    if (!all_full && !all_dropped) {
      MIDVariant v;
      v.kept = states;
      v.text = render_with_states(phrases, states, tmpl);
      v.source_caption_id = caption_id;
      out.push_back(std::move(v));
    }
    // Odometer increment, last phrase fastest.
    std::size_t pos = phrases.size();
    while (pos > 0) {
      --pos;
      if (++digit[pos] < options[pos].size()) break;
      digit[pos] = 0;
      if (pos == 0) return out;
    }
  }
}

std::vector<MIDVariant> sample_mids(std::span<const MIDVariant> variants, int k_m,
                                    std::uint64_t seed) {
  return sample_or_resample(variants, k_m, seed);
}

std::string drop_one_phrase(std::span<const AttributePhrase> phrases,
                            std::string_view caption, std::uint64_t seed) {
  if (phrases.size() < 2) return std::string(caption);
  std::mt19937_64 rng(splitmix64(seed));
  const std::size_t victim =
      std::uniform_int_distribution<std::size_t>(0, phrases.size() - 1)(rng);
  std::vector<PhraseState> states(phrases.size(), PhraseState::kFull);
  states[victim] = PhraseState::kDropped;
  return render_with_states(phrases, states, mid_template_index(caption));
}

nlohmann::json mid_to_json(const MIDVariant& mid) {
  std::vector<std::string> states;
  for (PhraseState s : mid.kept) states.emplace_back(state_key(s));
  return {{"caption_id", mid.source_caption_id}, {"states", states}, {"text", mid.text}};
}

}  // namespace tpsearch
