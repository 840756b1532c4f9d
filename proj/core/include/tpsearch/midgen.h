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

// Multi-integrity descriptions: grammatical rewritings of a caption that
// keep only part of its attribute information.

#ifndef TPSEARCH_MIDGEN_H_
#define TPSEARCH_MIDGEN_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/textparse.h"

namespace tpsearch {

enum class PhraseState {
  kFull,
  kNounOnly,       // adjectives erased
  kAdjectiveOnly,  // noun erased, adjectives dangle (full-component mode only)
  kDropped,
};

enum class MidMode {
  // Each phrase: full, noun only, or dropped.
  kAdjectiveAndPhrase,
  // Additionally allows erasing just the noun.
  kFullComponent,
};

std::string_view state_key(PhraseState state);
std::string_view mid_mode_key(MidMode mode);
MidMode parse_mid_mode(std::string_view key);

struct MIDVariant {
  std::string text;
  std::vector<PhraseState> kept;  // one entry per source phrase
  int source_caption_id = -1;

  friend bool operator==(const MIDVariant&, const MIDVariant&) = default;
};

// Template used to re-render rewritings of `caption` (stable hash).
int mid_template_index(std::string_view caption);

// Renders the phrases under the given states with template `template_index`.
std::string render_with_states(std::span<const AttributePhrase> phrases,
                               std::span<const PhraseState> states, int template_index);

// Every strictly-incomplete, non-empty rewriting, in lexicographic order of
// the state tuple (first phrase most significant). Phrases without
// adjectives only take {full, dropped}. Throws std::invalid_argument on an
// empty phrase list.
std::vector<MIDVariant> enumerate_mids(std::span<const AttributePhrase> phrases,
                                       std::string_view caption,
                                       MidMode mode = MidMode::kAdjectiveAndPhrase,
                                       int caption_id = -1);

// min(k_m, |variants|) distinct picks, topped up with replacement to k_m when
// fewer variants exist. k_m == 0 yields nothing.
std::vector<MIDVariant> sample_mids(std::span<const MIDVariant> variants, int k_m,
                                    std::uint64_t seed);

// Caption with one randomly chosen phrase removed (query degradation).
// Returns the caption unchanged when it has fewer than two phrases.
std::string drop_one_phrase(std::span<const AttributePhrase> phrases,
                            std::string_view caption, std::uint64_t seed);

nlohmann::json mid_to_json(const MIDVariant& mid);

}  // namespace tpsearch

#endif  // TPSEARCH_MIDGEN_H_
