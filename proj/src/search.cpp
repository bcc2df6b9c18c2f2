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

#include "crashdedup/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <map>
#include <thread>
#include <tuple>

#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

struct ClusterDensity {
  std::vector<std::size_t> members;
  std::vector<double> core;             // all-points core distance, by member
  std::vector<std::size_t> internal;    // members used for separation
  double sparseness = 0.0;
};

// All-points core distance of member i: the inverse d-th power mean of the
// inverse distances to the other members, evaluated in log space.
double all_points_core_distance(const PointSet& points, const std::vector<std::size_t>& members,
                                std::size_t i) {
  const double d = static_cast<double>(points.dim());
  std::vector<double> logs;
  logs.reserve(members.size() - 1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (j == i) continue;
    double dist = points.distance(members[i], members[j]);
    if (dist == 0.0) return 0.0;
    logs.push_back(-d * std::log(dist));
  }
  double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  double log_mean = peak + std::log(sum) - std::log(static_cast<double>(logs.size()));
  return std::exp(-log_mean / d);
}

ClusterDensity describe_cluster(const PointSet& points, std::vector<std::size_t> members) {
  ClusterDensity c;
  c.members = std::move(members);
  const std::size_t m = c.members.size();
  c.core.resize(m);
  for (std::size_t i = 0; i < m; ++i) c.core[i] = all_points_core_distance(points, c.members, i);
  auto reach = [&](std::size_t i, std::size_t j) {
    return std::max({c.core[i], c.core[j], points.distance(c.members[i], c.members[j])});
  };

  // Prim over the cluster's mutual reachability graph. Core distances often
  // dominate, so many edges share a weight and the tree is not unique; equal
  // weights are ordered by plain distance, which keeps the internal nodes
  // independent of point order.
  struct Edge {
    std::size_t a, b;
    double w;
    double d;
    auto key() const { return std::make_tuple(w, d, a, b); }
  };
  std::vector<Edge> edges;
  std::vector<Edge> best(m, Edge{0, 0, kInfinity, kInfinity});
  std::vector<bool> in_tree(m, false);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t added = 1; added < m; ++added) {
    std::size_t next = m;
    for (std::size_t v = 0; v < m; ++v) {
      if (in_tree[v]) continue;
      Edge candidate{std::min(current, v), std::max(current, v), reach(current, v),
                     points.distance(c.members[current], c.members[v])};
      if (candidate.key() < best[v].key()) best[v] = candidate;
      if (next == m || best[v].key() < best[next].key()) next = v;
    }
    edges.push_back(best[next]);
    in_tree[next] = true;
    current = next;
  }

  std::vector<std::size_t> degree(m, 0);
  for (const Edge& e : edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<bool> internal(m, false);
  bool any_internal = false;
  for (std::size_t i = 0; i < m; ++i) {
    internal[i] = degree[i] > 1;
    any_internal = any_internal || internal[i];
  }
  // Clusters of two or three points have no internal nodes; fall back to all
  // of them, and likewise to all edges when no edge joins two internal nodes.
  if (!any_internal) std::fill(internal.begin(), internal.end(), true);
  bool any_internal_edge = false;
  for (const Edge& e : edges) {
    if (internal[e.a] && internal[e.b]) {
      c.sparseness = std::max(c.sparseness, e.w);
      any_internal_edge = true;
    }
  }
  if (!any_internal_edge)
    for (const Edge& e : edges) c.sparseness = std::max(c.sparseness, e.w);
  for (std::size_t i = 0; i < m; ++i)
    if (internal[i]) c.internal.push_back(i);
  return c;
}

double separation(const PointSet& points, const ClusterDensity& x, const ClusterDensity& y) {
  double best = kInfinity;
  for (std::size_t i : x.internal) {
    for (std::size_t j : y.internal) {
      double d = std::max({x.core[i], y.core[j], points.distance(x.members[i], y.members[j])});
      best = std::min(best, d);
    }
  }
  return best;
}

// Orderings used by the selection stages. Each ends in a total order so the
// result does not depend on input order.
auto stage_one_key(const CandidateClustering& c) {
  return std::make_tuple(-c.dbcv, -c.persistence, c.effective_count, c.clustering.epsilon,
                         std::cref(c.clustering.labels));
}
auto stage_three_key(const CandidateClustering& c) {
  return std::make_tuple(c.effective_count, -c.persistence, -c.dbcv, c.clustering.epsilon,
                         std::cref(c.clustering.labels));
}

}  // namespace

void SearchParams::validate() const {
  if (num_steps == 0) throw Error("num_steps must be at least 1");
  if (min_dist && max_dist && *min_dist > *max_dist)
    throw Error("min_dist exceeds max_dist");
  if ((min_dist && *min_dist < 0.0) || (max_dist && *max_dist < 0.0))
    throw Error("search distances must be non-negative");
}

std::size_t effective_count(const Clustering& clustering) {
  return clustering.num_clusters + clustering.noise_count();
}

double dbcv(const PointSet& points, std::span<const int> labels) {
  if (labels.size() != points.size()) throw Error("labels do not cover the point set");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != kNoise) groups[labels[i]].push_back(i);

  std::vector<ClusterDensity> clusters;
  for (auto& [label, members] : groups)
    if (members.size() >= 2) clusters.push_back(describe_cluster(points, std::move(members)));
  if (clusters.size() < 2) return 0.0;

  const std::size_t k = clusters.size();
  std::vector<double> min_sep(k, kInfinity);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double s = separation(points, clusters[i], clusters[j]);
      min_sep[i] = std::min(min_sep[i], s);
      min_sep[j] = std::min(min_sep[j], s);
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double denom = std::max(min_sep[i], clusters[i].sparseness);
    double validity = denom > 0.0 ? (min_sep[i] - clusters[i].sparseness) / denom : 0.0;
    total += static_cast<double>(clusters[i].members.size()) * validity;
  }
  return total / static_cast<double>(points.size());
}

CandidateClustering choose_best(std::span<const CandidateClustering> candidates) {
  if (candidates.empty()) throw Error("choose_best needs at least one candidate");
  std::vector<CandidateClustering> pool(candidates.begin(), candidates.end());

  double top_dbcv = -kInfinity;
  for (const auto& c : pool) top_dbcv = std::max(top_dbcv, c.dbcv);
  if (top_dbcv != 0.0) {
    double floor = top_dbcv - 0.2 * std::fabs(top_dbcv);
    std::erase_if(pool, [&](const auto& c) { return c.dbcv < floor; });
  }
  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return stage_one_key(a) < stage_one_key(b); });
  if (pool.size() > 10) pool.resize(10);

  double top_persistence = 0.0;
  for (const auto& c : pool) top_persistence = std::max(top_persistence, c.persistence);
  std::erase_if(pool, [&](const auto& c) { return c.persistence < 0.8 * top_persistence; });

  return *std::min_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    return stage_three_key(a) < stage_three_key(b);
  });
}

std::vector<CandidateClustering> score_candidates(const PointSet& points,
                                                  const CondensedHierarchy& hierarchy,
                                                  std::vector<Clustering> clusterings,
                                                  double d_min, double d_max) {
  std::map<std::vector<int>, Clustering> unique;
  for (Clustering& c : clusterings) {
    std::vector<int> key = canonical_labels(c.labels);
    auto it = unique.find(key);
    if (it == unique.end()) {
      unique.emplace(std::move(key), std::move(c));
    } else if (c.epsilon < it->second.epsilon) {
      it->second = std::move(c);
    }
  }

  std::vector<CandidateClustering> scored;
  scored.reserve(unique.size());
  EpsilonSweep sweep(hierarchy, d_min, d_max);
  for (auto& [key, c] : unique) {
    CandidateClustering candidate;
    candidate.persistence = sweep.persistence(c);
    candidate.effective_count = effective_count(c);
    candidate.clustering = std::move(c);
    scored.push_back(std::move(candidate));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.clustering.epsilon < b.clustering.epsilon;
  });

  // DBCV is the expensive part; candidates are independent.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scored.size(); i = next++)
      scored[i].dbcv = dbcv(points, scored[i].clustering.labels);
  };
  std::size_t threads = std::min<std::size_t>(
      scored.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  return scored;
}

SearchResult cluster_search(const PointSet& points, const CondensedHierarchy& hierarchy,
                            const SearchParams& params) {
  params.validate();
  const std::size_t n = points.size();
  if (n == 0) throw Error("cannot cluster an empty point set");
  if (hierarchy.num_points() != n)
    throw Error("hierarchy was built from a different point set");

  SearchResult result;
  if (n == 1) {
    Clustering single;
    single.labels = {0};
    single.num_clusters = 1;
    single.mode = "single";
    result.best = CandidateClustering{single, 0.0, 1.0, 1};
    result.candidates = {result.best};
    return result;
  }

  auto [d_min, d_max] = distance_range(points);
  result.min_dist = params.min_dist.value_or(d_min);
  result.max_dist = params.max_dist.value_or(d_max);
  if (result.min_dist > result.max_dist) throw Error("min_dist exceeds max_dist");

  std::deque<std::pair<double, double>> queue{{result.min_dist, result.max_dist}};
  std::vector<Clustering> clusterings;
  const double steps_d = static_cast<double>(params.num_steps);
  while (!queue.empty() && result.iterations < params.num_steps) {
    auto [start, end] = queue.front();
    queue.pop_front();
    Clustering at_start = extract_hybrid(hierarchy, std::max(start, 0.0));
    Clustering at_end = extract_hybrid(hierarchy, std::max(end, 0.0));
    result.extractions += 2;
    bool differ = !same_partition(at_start.labels, at_end.labels);
    clusterings.push_back(std::move(at_start));
    clusterings.push_back(std::move(at_end));
    if (differ) {
      double mid = (start + end) / 2.0;
      double step = (mid - start) / steps_d;
      queue.emplace_back(start + step, mid);
      queue.emplace_back(mid + step, end - step);
    }
    ++result.iterations;
  }

  result.candidates = score_candidates(points, hierarchy, std::move(clusterings), d_min, d_max);
  result.best = choose_best(result.candidates);
  return result;
}

SearchResult cluster_points(const PointSet& points, const SearchParams& params) {
  if (points.size() == 0) throw Error("cannot cluster an empty point set");
  CondensedHierarchy hierarchy = condense(build_mst(points, 1), 2);
  return cluster_search(points, hierarchy, params);
}

}  // namespace crashdedup
