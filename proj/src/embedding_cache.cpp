// Copyright 2026 The crashdedup Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crashdedup/embedding_cache.hpp"

#include <nlohmann/json.hpp>

#include "crashdedup/errors.hpp"

namespace crashdedup {

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : path_(std::move(file)) {
  if (path_.empty()) return;
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error("cannot read embedding cache " + path_.string());
    std::string line;
    std::size_t line_no = 0;
    std::uintmax_t good_bytes = 0;  // end of the last complete, valid line
    bool torn = false;
    while (std::getline(in, line)) {
      ++line_no;
      const bool terminated = !in.eof();
      if (line.empty()) {
        good_bytes += 1;
        continue;
      }
      try {
        auto j = nlohmann::json::parse(line);
        EmbeddingVector v{j.at("values").get<std::vector<double>>(), false};
        if (v.dim() != j.at("dim").get<std::size_t>())
          throw Error("dim does not match values");
        if (!terminated) throw Error("unterminated line");
        entries_[{j.at("model").get<std::string>(), j.at("hash").get<std::string>()}] =
            std::move(v);
        good_bytes += line.size() + 1;
      } catch (const std::exception& e) {
        // A torn final line from an interrupted run is dropped; anything else
        // means the file is not ours.
        if (in.peek() != std::char_traits<char>::eof())
          throw Error(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
        torn = true;
        break;
      }
    }
    in.close();
    // Cut the fragment so later appends start on a fresh line.
    if (torn) std::filesystem::resize_file(path_, good_bytes);
  } else if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
  out_.open(path_, std::ios::binary | std::ios::app);
  if (!out_) throw Error("cannot open embedding cache " + path_.string());
}

std::optional<EmbeddingVector> EmbeddingCache::lookup(const std::string& model,
                                                      const std::string& hash) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find({model, hash});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::store(const std::string& model, const std::string& hash,
                           const EmbeddingVector& vector) {
  std::unique_lock lock(mutex_);
  if (out_.is_open()) {
    nlohmann::json j;
    j["model"] = model;
    j["hash"] = hash;
    j["dim"] = vector.dim();
    j["values"] = vector.values;
    out_ << j.dump() << '\n';
    out_.flush();
    if (!out_) throw Error("cannot append to embedding cache " + path_.string());
  }
  entries_[{model, hash}] = vector;
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace crashdedup
