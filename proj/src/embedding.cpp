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

#include "crashdedup/embedding.hpp"

#include <cctype>
#include <cmath>

#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class FeatureHasher {
 public:
  explicit FeatureHasher(std::uint64_t seed) : basis_(kOffset ^ splitmix64(seed)) {}

  // FNV-1a over the parts (separated by 0x1f), finalized with splitmix64.
  std::uint64_t hash(std::span<const std::string_view> parts) const {
    std::uint64_t h = basis_;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) mix(h, 0x1f);
      for (char c : parts[i]) mix(h, static_cast<unsigned char>(c));
    }
    mix(h, static_cast<unsigned char>(parts.size()));
    return splitmix64(h);
  }

 private:
  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  static void mix(std::uint64_t& h, unsigned char byte) {
    h ^= byte;
    h *= kPrime;
  }
  std::uint64_t basis_;
};

bool is_token_byte(char c) {
  auto b = static_cast<unsigned char>(c);
  return b >= 0x80 || std::isalnum(b);
}

void check_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) throw DegenerateVectorError("embedding has non-finite entries");
}

}  // namespace

double l2_norm(std::span<const double> v) {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : v) {
    if (x == 0.0) continue;
    double a = std::fabs(x);
    if (scale < a) {
      ssq = 1.0 + ssq * (scale / a) * (scale / a);
      scale = a;
    } else {
      ssq += (a / scale) * (a / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

std::vector<std::string_view> tokenize(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !is_token_byte(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && is_token_byte(text[i])) ++i;
    if (i > start) tokens.push_back(text.substr(start, i - start));
  }
  return tokens;
}

std::vector<double> offline_feature_counts(std::string_view text, std::size_t dim,
                                           std::uint64_t seed) {
  std::vector<double> counts(dim, 0.0);
  if (dim == 0) return counts;
  FeatureHasher hasher(seed);
  auto add = [&](std::span<const std::string_view> parts) {
    std::uint64_t h = hasher.hash(parts);
    std::size_t bucket = static_cast<std::size_t>((h & 0x7fffffffffffffffULL) % dim);
    counts[bucket] += (h >> 63) ? -1.0 : 1.0;
  };
  std::vector<std::string_view> tokens = tokenize(text);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(std::span<const std::string_view>(&tokens[i], 1));
    if (i + 3 <= tokens.size()) add(std::span<const std::string_view>(&tokens[i], 3));
  }
  return counts;
}

EmbeddingVector offline_embed(std::string_view text, std::size_t dim,
                              std::uint64_t seed) {
  if (dim < 8) throw Error("offline embedding dimension must be at least 8");
  EmbeddingVector v{offline_feature_counts(text, dim, seed), true};
  double norm = l2_norm(v.values);
  if (norm == 0.0) {
    v.values.assign(dim, 0.0);
    v.values[0] = 1.0;
    return v;
  }
  for (double& x : v.values) x /= norm;
  return v;
}

EmbeddingVector truncate_normalize(const EmbeddingVector& v, std::size_t target_dim,
                                   std::string_view label) {
  if (target_dim == 0 || target_dim > v.dim())
    throw Error("cannot truncate a " + std::to_string(v.dim()) +
                "-dimensional embedding to " + std::to_string(target_dim));
  std::span<const double> prefix(v.values.data(), target_dim);
  check_finite(prefix);
  double norm = l2_norm(prefix);
  if (norm == 0.0) {
    std::string who = label.empty() ? std::string("embedding") : "embedding of '" + std::string(label) + "'";
    throw DegenerateVectorError(who + " has a zero-norm " + std::to_string(target_dim) +
                                "-dimensional prefix");
  }
  EmbeddingVector out{std::vector<double>(prefix.begin(), prefix.end()), true};
  for (double& x : out.values) x /= norm;
  return out;
}

EmbeddingVector combine_sources(const std::map<SourceKind, EmbeddingVector>& per_source) {
  if (per_source.empty()) throw Error("combine_sources needs at least one source vector");
  const std::size_t dim = per_source.begin()->second.dim();
  std::vector<double> sum(dim, 0.0);
  for (const auto& [kind, v] : per_source) {
    if (v.dim() != dim)
      throw Error("source vectors disagree in dimension (" + std::to_string(dim) + " vs " +
                  std::to_string(v.dim()) + ")");
    check_finite(v.values);
    double norm = l2_norm(v.values);
    if (norm == 0.0)
      throw DegenerateVectorError("zero-norm " + std::string(to_string(kind)) + " vector");
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v.values[i] / norm;
  }
  double norm = l2_norm(sum);
  if (norm < 1e-12) throw DegenerateVectorError("source vectors cancel out");
  for (double& x : sum) x /= norm;
  return EmbeddingVector{std::move(sum), true};
}

}  // namespace crashdedup
