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

// Embedding providers and the cache-aware batching front end.
//
// The remote provider speaks the common embeddings wire shape:
//
//   POST <endpoint>/embeddings
//   {"model": "<model id>", "input": ["text", ...]}
//   -> {"data": [{"index": 0, "embedding": [...]}, ...]}
//
// authenticated with a bearer token taken from an environment variable.

#ifndef CRASHDEDUP_PROVIDER_HPP_
#define CRASHDEDUP_PROVIDER_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crashdedup/embedding.hpp"
#include "crashdedup/embedding_cache.hpp"

namespace crashdedup {

enum class ProviderKind { kOffline, kRemote };

struct EmbeddingProviderConfig {
  ProviderKind kind = ProviderKind::kOffline;
  std::string model;  // empty: derived from the offline parameters
  std::string endpoint;
  std::string api_key_env = "DEDUP_API_KEY";
  std::size_t batch_size = 100;
  std::size_t target_dim = 64;
  std::uint64_t seed = 0;
  std::size_t offline_dim = 256;
  double timeout_seconds = 120.0;

  void validate() const;
  // Cache namespace for this configuration.
  std::string model_id() const;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string model_id() const = 0;
  // One request; returns one vector per text, in order.
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
};

class OfflineProvider final : public EmbeddingProvider {
 public:
  OfflineProvider(std::size_t dim, std::uint64_t seed);
  std::string model_id() const override;
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

class RemoteProvider final : public EmbeddingProvider {
 public:
  // Reads the bearer token from `config.api_key_env` at construction; a
  // missing variable sends no Authorization header.
  explicit RemoteProvider(const EmbeddingProviderConfig& config);
  std::string model_id() const override { return model_; }
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::string model_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  double timeout_seconds_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config);

struct TextItem {
  std::string hash;
  std::string text;
};

struct EmbedStats {
  std::size_t cache_hits = 0;
  std::size_t provider_calls = 0;
  std::size_t embedded = 0;
};

// Resolves every item, from `cache` when possible; misses go to the provider
// in requests of at most `batch_size` texts, and each answer is stored before
// the next request. Items sharing a hash are embedded once. On a provider
// failure the thrown ProviderError lists the hashes still unresolved.
std::map<std::string, EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                                   EmbeddingCache& cache,
                                                   std::span<const TextItem> items,
                                                   std::size_t batch_size,
                                                   EmbedStats* stats = nullptr);

}  // namespace crashdedup

#endif  // CRASHDEDUP_PROVIDER_HPP_
