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

#include "crashdedup/provider.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <set>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "crashdedup/errors.hpp"

namespace crashdedup {

void EmbeddingProviderConfig::validate() const {
  if (batch_size == 0) throw Error("batch size must be positive");
  if (target_dim == 0) throw Error("target dimension must be positive");
  if (kind == ProviderKind::kOffline) {
    if (offline_dim < 8) throw Error("offline dimension must be at least 8");
    if (target_dim > offline_dim)
      throw Error("target dimension " + std::to_string(target_dim) +
                  " exceeds the offline dimension " + std::to_string(offline_dim));
  } else {
    if (endpoint.empty()) throw Error("remote provider needs an endpoint URL");
    if (model.empty()) throw Error("remote provider needs a model id");
  }
}

std::string EmbeddingProviderConfig::model_id() const {
  if (kind == ProviderKind::kRemote) return model;
  return "offline-featurehash-v1/d" + std::to_string(offline_dim) + "/s" +
         std::to_string(seed);
}

OfflineProvider::OfflineProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim_ < 8) throw Error("offline dimension must be at least 8");
}

std::string OfflineProvider::model_id() const {
  EmbeddingProviderConfig config;
  config.offline_dim = dim_;
  config.seed = seed_;
  return config.model_id();
}

std::vector<EmbeddingVector> OfflineProvider::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) out.push_back(offline_embed(text, dim_, seed_));
  return out;
}

RemoteProvider::RemoteProvider(const EmbeddingProviderConfig& config)
    : model_(config.model), timeout_seconds_(config.timeout_seconds) {
  const std::string& url = config.endpoint;
  std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error("endpoint URL needs a scheme (http:// or https://): " + url);
  std::size_t path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/embeddings";
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
  }
}

std::vector<EmbeddingVector> RemoteProvider::embed_batch(
    const std::vector<std::string>& texts) {
  httplib::Client client(scheme_host_port_);
  auto timeout = std::chrono::duration<double>(timeout_seconds_);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  nlohmann::json body{{"model", model_}, {"input", texts}};

  auto response = client.Post(path_, headers, body.dump(), "application/json");
  if (!response)
    throw ProviderError("embedding request to " + scheme_host_port_ + path_ +
                            " failed: " + httplib::to_string(response.error()),
                        {});
  if (response->status == 401 || response->status == 403)
    throw ProviderError("embedding provider rejected the credentials (HTTP " +
                            std::to_string(response->status) + ")",
                        {});
  if (response->status != 200)
    throw ProviderError("embedding provider answered HTTP " +
                            std::to_string(response->status) + ": " +
                            response->body.substr(0, 200),
                        {});

  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(response->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
  }
  if (!reply.contains("data") || !reply["data"].is_array())
    throw ProtocolError("embedding response has no \"data\" array");
  const auto& data = reply["data"];
  if (data.size() != texts.size())
    throw ProtocolError("embedding response carries " + std::to_string(data.size()) +
                        " vectors for " + std::to_string(texts.size()) + " inputs");

  std::vector<EmbeddingVector> out(texts.size());
  std::set<std::size_t> seen;
  for (const auto& item : data) {
    try {
      auto index = item.at("index").get<std::size_t>();
      if (index >= texts.size() || !seen.insert(index).second)
        throw ProtocolError("embedding response has a bad or repeated index " +
                            std::to_string(index));
      out[index].values = item.at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("malformed embedding entry: ") + e.what());
    }
  }
  for (const auto& v : out) {
    if (v.values.empty() || v.dim() != out.front().dim())
      throw ProtocolError("embedding response has empty or ragged vectors");
  }
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config) {
  config.validate();
  if (config.kind == ProviderKind::kRemote) return std::make_unique<RemoteProvider>(config);
  return std::make_unique<OfflineProvider>(config.offline_dim, config.seed);
}

std::map<std::string, EmbeddingVector> embed_texts(EmbeddingProvider& provider,
                                                   EmbeddingCache& cache,
                                                   std::span<const TextItem> items,
                                                   std::size_t batch_size,
                                                   EmbedStats* stats) {
  if (batch_size == 0) throw Error("batch size must be positive");
  const std::string model = provider.model_id();
  EmbedStats local;
  std::map<std::string, EmbeddingVector> result;
  std::vector<const TextItem*> misses;
  std::set<std::string> queued;
  for (const TextItem& item : items) {
    if (item.text.empty()) throw Error("cannot embed an empty text (hash " + item.hash + ")");
    if (result.count(item.hash) || queued.count(item.hash)) continue;
    if (auto hit = cache.lookup(model, item.hash)) {
      result.emplace(item.hash, std::move(*hit));
      ++local.cache_hits;
    } else {
      misses.push_back(&item);
      queued.insert(item.hash);
    }
  }

  for (std::size_t start = 0; start < misses.size(); start += batch_size) {
    std::size_t end = std::min(misses.size(), start + batch_size);
    std::vector<std::string> texts;
    for (std::size_t i = start; i < end; ++i) texts.push_back(misses[i]->text);
    std::vector<EmbeddingVector> vectors;
    try {
      ++local.provider_calls;
      vectors = provider.embed_batch(texts);
    } catch (const ProviderError& e) {
      std::vector<std::string> unresolved;
      for (std::size_t i = start; i < misses.size(); ++i) unresolved.push_back(misses[i]->hash);
      if (stats) *stats = local;
      throw ProviderError(e.what(), std::move(unresolved));
    }
    if (vectors.size() != texts.size())
      throw ProtocolError("provider returned " + std::to_string(vectors.size()) +
                          " vectors for " + std::to_string(texts.size()) + " texts");
    for (std::size_t i = start; i < end; ++i) {
      EmbeddingVector& v = vectors[i - start];
      cache.store(model, misses[i]->hash, v);
      result.emplace(misses[i]->hash, std::move(v));
      ++local.embedded;
    }
  }
  if (stats) *stats = local;
  return result;
}

}  // namespace crashdedup
