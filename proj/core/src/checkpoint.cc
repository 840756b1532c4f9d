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

#include "tpsearch/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace tpsearch {
namespace {

constexpr char kMagic[8] = {'T', 'P', 'S', 'C', 'K', 'P', 'T', '1'};

}  // namespace

const ag::Matrix& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors) {
    if (n == name) return m;
  }
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    index.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size());
  }
  const std::string header = nlohmann::json{{"meta", ckpt.meta}, {"tensors", index}}.dump();
  const std::uint64_t header_len = header.size();

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, m] : ckpt.tensors) {
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  std::uint64_t header_len = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: " + path.string() + " is not a checkpoint file");
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint: truncated header in " + path.string());
  const auto j = nlohmann::json::parse(header);

  Checkpoint ckpt;
  ckpt.meta = j.at("meta");
  for (const auto& entry : j.at("tensors")) {
    ag::Matrix m(entry.at("rows").get<ag::Index>(), entry.at("cols").get<ag::Index>());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated data in " + path.string());
    ckpt.tensors.emplace_back(entry.at("name").get<std::string>(), std::move(m));
  }
  return ckpt;
}

}  // namespace tpsearch
