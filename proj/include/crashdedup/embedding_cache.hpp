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

#ifndef CRASHDEDUP_EMBEDDING_CACHE_HPP_
#define CRASHDEDUP_EMBEDDING_CACHE_HPP_

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>

#include "crashdedup/embedding.hpp"

namespace crashdedup {

// Embeddings at full provider dimension keyed by (model id, content hash).
//
// Backed by a line-delimited JSON file, one {model, hash, dim, values} object
// per line, appended on every store. An empty path keeps the cache in memory.
// Reads may run concurrently; stores are serialized.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path file);

  EmbeddingCache(const EmbeddingCache&) = delete;
  EmbeddingCache& operator=(const EmbeddingCache&) = delete;

  std::optional<EmbeddingVector> lookup(const std::string& model,
                                        const std::string& hash) const;
  void store(const std::string& model, const std::string& hash,
             const EmbeddingVector& vector);

  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  using Key = std::pair<std::string, std::string>;

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::map<Key, EmbeddingVector> entries_;
  std::ofstream out_;
};

}  // namespace crashdedup

#endif  // CRASHDEDUP_EMBEDDING_CACHE_HPP_
