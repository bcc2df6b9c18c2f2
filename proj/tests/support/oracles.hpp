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

// Reference implementations used only by tests. Each one follows the textbook
// definition as literally as possible, trading speed for obviousness, and
// shares no code with the library beyond its data types.

#ifndef CRASHDEDUP_TESTS_ORACLES_HPP_
#define CRASHDEDUP_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <tuple>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;
using Matrix = std::vector<std::vector<double>>;
constexpr int kNoise = -1;

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> normalized(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
  return v;
}

inline Rows random_unit_vectors(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Rows rows(n, std::vector<double>(dim));
  for (auto& r : rows) {
    for (double& x : r) x = g(rng);
    r = normalized(r);
  }
  return rows;
}

// Isotropic Gaussian blobs around the given centres.
inline Rows gaussian_blobs(std::mt19937_64& rng, const Rows& centres,
                           const std::vector<std::size_t>& sizes, double sigma,
                           std::vector<int>* truth = nullptr) {
  std::normal_distribution<double> g(0.0, sigma);
  Rows rows;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t k = 0; k < sizes[c]; ++k) {
      std::vector<double> p = centres[c];
      for (double& x : p) x += g(rng);
      rows.push_back(p);
      if (truth) truth->push_back(static_cast<int>(c));
    }
  }
  return rows;
}

inline Matrix distance_matrix(const Rows& rows) {
  Matrix m(rows.size(), std::vector<double>(rows.size(), 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.size(); ++j) m[i][j] = dist(rows[i], rows[j]);
  return m;
}

// Full mutual reachability matrix, core distance from a sorted neighbour list.
inline Matrix mutual_reachability_matrix(const Rows& rows, std::size_t m_pts) {
  Matrix d = distance_matrix(rows);
  const std::size_t n = rows.size();
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(d[i][j]);
    std::sort(others.begin(), others.end());
    core[i] = others[m_pts - 1];
  }
  Matrix mr(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) mr[i][j] = std::max({core[i], core[j], d[i][j]});
  return mr;
}

// Textbook Prim over a dense matrix; returns the total tree weight.
inline double prim_total_weight(const Matrix& w) {
  const std::size_t n = w.size();
  std::vector<bool> in(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  best[0] = 0.0;
  double total = 0.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && (u == n || best[v] < best[u])) u = v;
    in[u] = true;
    total += best[u];
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && w[u][v] < best[v]) best[v] = w[u][v];
  }
  return total;
}

struct Edge {
  std::size_t a, b;
  double w;
  double tie;
};

// Kruskal over all pairs of `nodes` with weights from `w`. Equal weights are
// ordered by `tie` when given, then by endpoint index.
inline std::vector<Edge> kruskal(
    const std::vector<std::size_t>& nodes,
    const std::function<double(std::size_t, std::size_t)>& w,
    const std::function<double(std::size_t, std::size_t)>& tie = nullptr) {
  std::vector<Edge> all;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      all.push_back({i, j, w(i, j), tie ? tie(i, j) : 0.0});
  std::sort(all.begin(), all.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.w, x.tie, x.a, x.b) < std::tie(y.w, y.tie, y.a, y.b);
  });
  std::vector<std::size_t> parent(nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  std::vector<Edge> tree;
  for (const Edge& e : all) {
    std::size_t ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[ra] = rb;
    tree.push_back(e);
  }
  return tree;
}

// DBSCAN* at level eps: points joined when their mutual reachability is
// below eps; points joined to nobody are noise. Labels in first-seen order.
inline std::vector<int> dbscan_star(const Matrix& mr, double eps) {
  const std::size_t n = mr.size();
  std::vector<int> label(n, -2);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] != -2) continue;
    bool has_neighbour = false;
    for (std::size_t j = 0; j < n; ++j)
      if (j != s && mr[s][j] < eps) has_neighbour = true;
    if (!has_neighbour) {
      label[s] = kNoise;
      continue;
    }
    std::vector<std::size_t> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v) {
        if (v != u && label[v] == -2 && mr[u][v] < eps) {
          label[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return label;
}

// Partition equality up to renaming, with noise matched only to noise.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == kNoise) != (b[i] == kNoise)) return false;
    if (a[i] == kNoise) continue;
    auto [x, fresh_x] = ab.emplace(a[i], b[i]);
    auto [y, fresh_y] = ba.emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

// DBCV straight from the definition: all-points core distance with explicit
// powers, mutual reachability, Kruskal MST per cluster (equal reachability
// broken by plain distance), internal nodes of degree > 1. Singletons and noise score 0 and are left out of separation.
inline double dbcv(const Rows& rows, const std::vector<int>& labels) {
  const std::size_t n = rows.size();
  const double d = static_cast<double>(rows[0].size());
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] != kNoise) groups[labels[i]].push_back(i);
  std::vector<std::vector<std::size_t>> clusters;
  for (auto& [l, members] : groups)
    if (members.size() >= 2) clusters.push_back(members);
  if (clusters.size() < 2) return 0.0;

  std::vector<double> core(n, 0.0);
  for (const auto& c : clusters) {
    for (std::size_t x : c) {
      double sum = 0.0;
      for (std::size_t y : c)
        if (y != x) sum += std::pow(1.0 / dist(rows[x], rows[y]), d);
      core[x] = std::pow(sum / static_cast<double>(c.size() - 1), -1.0 / d);
    }
  }
  auto mreach = [&](std::size_t x, std::size_t y) {
    return std::max({core[x], core[y], dist(rows[x], rows[y])});
  };

  std::vector<double> sparseness(clusters.size(), 0.0);
  std::vector<std::vector<std::size_t>> internal(clusters.size());
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto& c = clusters[k];
    auto tree = kruskal(
        c, [&](std::size_t i, std::size_t j) { return mreach(c[i], c[j]); },
        [&](std::size_t i, std::size_t j) { return dist(rows[c[i]], rows[c[j]]); });
    std::vector<int> degree(c.size(), 0);
    for (const auto& e : tree) {
      ++degree[e.a];
      ++degree[e.b];
    }
    std::vector<bool> inner(c.size());
    bool any = false;
    for (std::size_t i = 0; i < c.size(); ++i) any |= (inner[i] = degree[i] > 1);
    if (!any) inner.assign(c.size(), true);
    bool any_edge = false;
    for (const auto& e : tree) {
      if (inner[e.a] && inner[e.b]) {
        sparseness[k] = std::max(sparseness[k], e.w);
        any_edge = true;
      }
    }
    if (!any_edge)
      for (const auto& e : tree) sparseness[k] = std::max(sparseness[k], e.w);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (inner[i]) internal[k].push_back(c[i]);
  }

  double total = 0.0;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < clusters.size(); ++o) {
      if (o == k) continue;
      for (std::size_t x : internal[k])
        for (std::size_t y : internal[o]) sep = std::min(sep, mreach(x, y));
    }
    double denom = std::max(sep, sparseness[k]);
    double v = denom > 0 ? (sep - sparseness[k]) / denom : 0.0;
    total += static_cast<double>(clusters[k].size()) / static_cast<double>(n) * v;
  }
  return total;
}

// Clustering scores by direct summation over sets of point indices.
struct Scores {
  double purity, inverse_purity, f_measure;
  std::map<std::string, std::pair<std::size_t, std::size_t>> over_under;
};

inline Scores direct_scores(const std::vector<std::string>& truth,
                            const std::vector<std::string>& cluster) {
  const std::size_t n = truth.size();
  std::set<std::string> labels(truth.begin(), truth.end());
  std::set<std::string> clusters(cluster.begin(), cluster.end());
  auto members = [&](const std::vector<std::string>& v, const std::string& key) {
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (v[i] == key) s.insert(i);
    return s;
  };
  auto overlap = [](const std::set<std::size_t>& a, const std::set<std::size_t>& b) {
    std::size_t k = 0;
    for (std::size_t x : a) k += b.count(x);
    return static_cast<double>(k);
  };
  Scores s{0.0, 0.0, 0.0, {}};
  const double N = static_cast<double>(n);
  for (const auto& c : clusters) {
    auto C = members(cluster, c);
    double best = 0.0;
    for (const auto& l : labels) best = std::max(best, overlap(members(truth, l), C) / C.size());
    s.purity += C.size() / N * best;
  }
  for (const auto& l : labels) {
    auto L = members(truth, l);
    double best_r = 0.0, best_f = 0.0;
    std::set<std::string> touched;
    std::set<std::string> mixed;
    for (const auto& c : clusters) {
      auto C = members(cluster, c);
      double o = overlap(L, C);
      double p = o / C.size(), r = o / L.size();
      best_r = std::max(best_r, r);
      best_f = std::max(best_f, p + r > 0 ? 2 * p * r / (p + r) : 0.0);
      if (o > 0) {
        touched.insert(c);
        for (std::size_t i : C)
          if (truth[i] != l) mixed.insert(truth[i]);
      }
    }
    s.inverse_purity += L.size() / N * best_r;
    s.f_measure += L.size() / N * best_f;
    s.over_under[l] = {touched.size() - 1, mixed.size()};
  }
  return s;
}

// Merge distances of naive agglomerative single linkage on 1-D points.
inline std::vector<double> single_linkage_merges(std::vector<double> xs) {
  std::vector<std::vector<double>> groups;
  for (double x : xs) groups.push_back({x});
  std::vector<double> merges;
  while (groups.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = i + 1; j < groups.size(); ++j)
        for (double a : groups[i])
          for (double b : groups[j])
            if (std::fabs(a - b) < best) {
              best = std::fabs(a - b);
              bi = i;
              bj = j;
            }
    groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
    merges.push_back(best);
  }
  return merges;
}

// Number of naive single-linkage merges on `rows` in which both merging
// groups have at least `min_size` points.
inline std::size_t qualifying_merges(const Rows& rows, std::size_t min_size) {
  Matrix d = distance_matrix(rows);
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) groups.push_back({i});
  std::size_t count = 0;
  while (groups.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < groups.size(); ++i)
      for (std::size_t j = i + 1; j < groups.size(); ++j)
        for (std::size_t a : groups[i])
          for (std::size_t b : groups[j])
            if (d[a][b] < best) {
              best = d[a][b];
              bi = i;
              bj = j;
            }
    if (groups[bi].size() >= min_size && groups[bj].size() >= min_size) ++count;
    groups[bi].insert(groups[bi].end(), groups[bj].begin(), groups[bj].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  return count;
}

}  // namespace oracle

#endif  // CRASHDEDUP_TESTS_ORACLES_HPP_
