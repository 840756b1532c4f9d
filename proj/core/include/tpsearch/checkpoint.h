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

// Checkpoint container: a JSON metadata block plus a flat list of named
// double tensors, stored bit-exactly.
//
// Layout: "TPSCKPT1" | u64 header length | header JSON | raw tensor data.
// The header lists {"meta": ..., "tensors": [{"name","rows","cols","offset"}]}
// with offsets in doubles from the start of the data section.

#ifndef TPSEARCH_CHECKPOINT_H_
#define TPSEARCH_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tpsearch/autograd.h"

namespace tpsearch {

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, ag::Matrix>> tensors;

  // Throws std::out_of_range for an unknown name.
  const ag::Matrix& tensor(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws std::runtime_error on a truncated or foreign file.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace tpsearch

#endif  // TPSEARCH_CHECKPOINT_H_
