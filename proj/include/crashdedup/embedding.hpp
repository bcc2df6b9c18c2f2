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

#ifndef CRASHDEDUP_EMBEDDING_HPP_
#define CRASHDEDUP_EMBEDDING_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crashdedup/preprocess.hpp"

namespace crashdedup {

struct EmbeddingVector {
  std::vector<double> values;
  bool unit_norm = false;

  std::size_t dim() const { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

double l2_norm(std::span<const double> v);

// Tokens are maximal runs of alphanumeric bytes (bytes >= 0x80 count as
// alphanumeric so UTF-8 words stay whole).
std::vector<std::string_view> tokenize(std::string_view text);

// Signed feature-hashing counts before normalization: every token and every
// run of three consecutive tokens is hashed with `seed` into one of `dim`
// buckets with a +1/-1 sign.
std::vector<double> offline_feature_counts(std::string_view text, std::size_t dim,
                                           std::uint64_t seed);

// Deterministic stand-in for a language-model embedding: the counts above,
// scaled to unit norm. Text without features maps to the basis vector e1.
// Requires dim >= 8.
EmbeddingVector offline_embed(std::string_view text, std::size_t dim,
                              std::uint64_t seed);

// First `target_dim` entries rescaled to unit norm. `label` names the record
// in the error raised for a zero-norm prefix.
EmbeddingVector truncate_normalize(const EmbeddingVector& v, std::size_t target_dim,
                                   std::string_view label = {});

// Sum of the per-source unit directions, renormalized.
EmbeddingVector combine_sources(const std::map<SourceKind, EmbeddingVector>& per_source);

}  // namespace crashdedup

#endif  // CRASHDEDUP_EMBEDDING_HPP_
