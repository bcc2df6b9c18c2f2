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

// Epsilon search over the hybrid extraction and selection of the best
// candidate clustering.
//
// The search bisects [min_dist, max_dist] breadth-first, only descending into
// intervals whose endpoint clusterings differ, for at most num_steps
// iterations. Every distinct partition seen is scored with DBCV and
// persistence, and the winner is picked in three stages:
//
//   1. keep candidates whose DBCV is within 20% of the best DBCV, at most ten
//   2. keep those whose persistence is within 20% of the best persistence
//   3. take the one with the fewest effective clusters (noise points count
//      as one cluster each); ties go to higher persistence, then higher DBCV,
//      then smaller epsilon

#ifndef CRASHDEDUP_SEARCH_HPP_
#define CRASHDEDUP_SEARCH_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "crashdedup/hdbscan.hpp"

namespace crashdedup {

struct CandidateClustering {
  Clustering clustering;
  double dbcv = 0.0;
  double persistence = 0.0;
  std::size_t effective_count = 0;
};

struct SearchParams {
  std::size_t num_steps = 64;
  std::optional<double> min_dist;  // default: smallest positive pairwise distance
  std::optional<double> max_dist;  // default: largest pairwise distance

  void validate() const;
};

struct SearchResult {
  CandidateClustering best;
  std::vector<CandidateClustering> candidates;  // one per distinct partition
  std::size_t iterations = 0;
  std::size_t extractions = 0;
  double min_dist = 0.0;
  double max_dist = 0.0;
};

std::size_t effective_count(const Clustering& clustering);

// Density-based clustering validation index in [-1, 1]. Noise points and
// singleton clusters contribute validity 0 and take no part in separation;
// with fewer than two clusters of size >= 2 the index is 0.
double dbcv(const PointSet& points, std::span<const int> labels);

CandidateClustering choose_best(std::span<const CandidateClustering> candidates);

// Drops repeated partitions (keeping the smallest epsilon) and scores the
// rest. Persistence is normalized by the data's distance range d_min..d_max.
std::vector<CandidateClustering> score_candidates(const PointSet& points,
                                                  const CondensedHierarchy& hierarchy,
                                                  std::vector<Clustering> clusterings,
                                                  double d_min, double d_max);

// `hierarchy` must come from `points` (m_clSize = 2, m_pts = 1 in the pipeline).
SearchResult cluster_search(const PointSet& points, const CondensedHierarchy& hierarchy,
                            const SearchParams& params = {});

// MST with m_pts = 1, condensed tree with m_clSize = 2, then the search.
SearchResult cluster_points(const PointSet& points, const SearchParams& params = {});

}  // namespace crashdedup

#endif  // CRASHDEDUP_SEARCH_HPP_
