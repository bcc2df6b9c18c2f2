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

// Exhaustive counterpart of the epsilon search: extract at every distance
// where the flat clustering can change and between each consecutive pair,
// then apply the same selection to everything found.

#ifndef CRASHDEDUP_TESTS_SEARCH_ORACLE_HPP_
#define CRASHDEDUP_TESTS_SEARCH_ORACLE_HPP_

#include <algorithm>
#include <vector>

#include "crashdedup/hdbscan.hpp"
#include "crashdedup/search.hpp"

namespace oracle {

// Every MST edge weight inside [lo, hi], the two ends, and all midpoints.
// The flat clustering only changes at MST edge weights, so this visits
// every reachable partition.
inline std::vector<double> exhaustive_epsilons(const crashdedup::MSTree& mst, double lo,
                                               double hi) {
  std::vector<double> levels = {lo, hi};
  for (const auto& e : mst.edges)
    if (e.weight >= lo && e.weight <= hi) levels.push_back(e.weight);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<double> out = levels;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i)
    out.push_back(0.5 * (levels[i] + levels[i + 1]));
  return out;
}

inline crashdedup::CandidateClustering exhaustive_choice(
    const crashdedup::PointSet& points, const crashdedup::MSTree& mst,
    const crashdedup::CondensedHierarchy& hierarchy,
    std::vector<crashdedup::CandidateClustering>* all = nullptr) {
  auto [lo, hi] = crashdedup::distance_range(points);
  std::vector<crashdedup::Clustering> clusterings;
  for (double eps : exhaustive_epsilons(mst, lo, hi))
    clusterings.push_back(crashdedup::extract_hybrid(hierarchy, eps));
  auto scored = crashdedup::score_candidates(points, hierarchy, std::move(clusterings), lo, hi);
  if (all) *all = scored;
  return crashdedup::choose_best(scored);
}

// Same partition, or indistinguishable to the selection rule.
inline bool ties(const crashdedup::CandidateClustering& a,
                 const crashdedup::CandidateClustering& b) {
  if (crashdedup::same_partition(a.clustering.labels, b.clustering.labels)) return true;
  return a.effective_count == b.effective_count && a.dbcv == b.dbcv &&
         a.persistence == b.persistence;
}

}  // namespace oracle

#endif  // CRASHDEDUP_TESTS_SEARCH_ORACLE_HPP_
