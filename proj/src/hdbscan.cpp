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

#include "crashdedup/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include <nlohmann/json.hpp>

#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

// lambda = 1 / distance, finite even for coincident points.
constexpr double kMaxLambda = 1e15;

double lambda_of(double distance) {
  if (std::isinf(distance)) return 0.0;
  return distance > 1.0 / kMaxLambda ? 1.0 / distance : kMaxLambda;
}

}  // namespace

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

PointSet::PointSet(std::vector<std::string> ids, std::size_t dim,
                   std::vector<double> coordinates, bool require_unit_norm)
    : ids_(std::move(ids)), dim_(dim), coordinates_(std::move(coordinates)) {
  if (dim_ == 0) throw Error("point dimension must be positive");
  if (coordinates_.size() != ids_.size() * dim_)
    throw Error("point coordinates do not match " + std::to_string(ids_.size()) + " x " +
                std::to_string(dim_));
  for (std::size_t i = 0; i < size(); ++i) {
    double sq = 0.0;
    for (double x : point(i)) {
      if (!std::isfinite(x)) throw Error("point '" + ids_[i] + "' has a non-finite coordinate");
      sq += x * x;
    }
    if (require_unit_norm && std::fabs(std::sqrt(sq) - 1.0) > 1e-6)
      throw Error("point '" + ids_[i] + "' is not unit-norm");
  }
}

PointSet PointSet::FromRows(const std::vector<std::vector<double>>& rows,
                            bool require_unit_norm) {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) ids.push_back(std::to_string(i));
  return FromRows(std::move(ids), rows, require_unit_norm);
}

PointSet PointSet::FromRows(std::vector<std::string> ids,
                            const std::vector<std::vector<double>>& rows,
                            bool require_unit_norm) {
  if (ids.size() != rows.size()) throw Error("ids and rows differ in length");
  std::size_t dim = rows.empty() ? 1 : rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) throw Error("rows differ in dimension");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return PointSet(std::move(ids), dim, std::move(flat), require_unit_norm);
}

double PointSet::distance(std::size_t a, std::size_t b) const {
  return euclidean_distance(point(a), point(b));
}

std::pair<double, double> distance_range(const PointSet& points) {
  double lo = kInfinity;
  double hi = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      double d = points.distance(i, j);
      if (d > 0.0) lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (hi == 0.0) return {0.0, 0.0};
  return {lo, hi};
}

MutualReachability::MutualReachability(const PointSet& points, std::size_t m_pts)
    : points_(&points), m_pts_(m_pts), core_(points.size(), 0.0) {
  const std::size_t n = points.size();
  if (m_pts == 0) throw Error("m_pts must be positive");
  if (n < 2) return;
  if (m_pts > n - 1)
    throw Error("m_pts = " + std::to_string(m_pts) + " needs at least " +
                std::to_string(m_pts + 1) + " points");
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row[k++] = points.distance(i, j);
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(m_pts - 1), row.end());
    core_[i] = row[m_pts - 1];
  }
}

double MutualReachability::operator()(std::size_t a, std::size_t b) const {
  if (a == b) return 0.0;
  return std::max({core_[a], core_[b], points_->distance(a, b)});
}

MutualReachability mutual_reachability(const PointSet& points, std::size_t m_pts) {
  return MutualReachability(points, m_pts);
}

double MSTree::total_weight() const {
  double sum = 0.0;
  for (const MstEdge& e : edges) sum += e.weight;
  return sum;
}

MSTree build_mst(const PointSet& points, std::size_t m_pts) {
  MutualReachability reachability(points, m_pts);
  return build_mst(reachability);
}

MSTree build_mst(const MutualReachability& reachability) {
  const std::size_t n = reachability.points().size();
  MSTree tree;
  tree.num_points = n;
  if (n < 2) return tree;

  // Key of the best known edge into each vertex outside the tree.
  using Key = std::tuple<double, std::size_t, std::size_t>;
  auto key_of = [](double w, std::size_t u, std::size_t v) {
    return Key{w, std::min(u, v), std::max(u, v)};
  };
  std::vector<Key> best(n, Key{kInfinity, n, n});
  std::vector<bool> in_tree(n, false);
  std::size_t current = 0;
  in_tree[0] = true;
  tree.edges.reserve(n - 1);
  for (std::size_t added = 1; added < n; ++added) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (in_tree[v]) continue;
      Key candidate = key_of(reachability(current, v), current, v);
      if (candidate < best[v]) best[v] = candidate;
      if (next == n || best[v] < best[next]) next = v;
    }
    auto [w, a, b] = best[next];
    tree.edges.push_back(MstEdge{a, b, w});
    in_tree[next] = true;
    current = next;
  }
  std::sort(tree.edges.begin(), tree.edges.end(), [](const MstEdge& x, const MstEdge& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  return tree;
}

CondensedHierarchy condense(const MSTree& mst, std::size_t min_cluster_size) {
  if (min_cluster_size < 2) throw Error("minimum cluster size must be at least 2");
  const std::size_t n = mst.num_points;
  if (n == 0) throw Error("cannot condense an empty tree");
  if (mst.edges.size() != n - 1)
    throw Error("spanning tree over " + std::to_string(n) + " points needs " +
                std::to_string(n - 1) + " edges");

  CondensedHierarchy h;
  h.min_cluster_size_ = min_cluster_size;
  h.departure_.assign(n, 0.0);
  h.owner_.assign(n, 0);
  h.nodes_.push_back(CondensedNode{-1, kInfinity, 0.0, n, {}, {}, 0.0});

  if (n == 1) {
    h.nodes_[0].points.push_back(0);
  } else {
    // Single-linkage dendrogram: leaves 0..n-1, merge k is node n + k.
    std::vector<MstEdge> edges = mst.edges;
    std::sort(edges.begin(), edges.end(), [](const MstEdge& x, const MstEdge& y) {
      return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
    });
    const std::size_t total = 2 * n - 1;
    std::vector<std::size_t> uf(total);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](std::size_t x) {
      while (uf[x] != x) {
        uf[x] = uf[uf[x]];
        x = uf[x];
      }
      return x;
    };
    std::vector<std::size_t> left(n - 1), right(n - 1), size(total, 1);
    std::vector<double> height(n - 1);
    for (std::size_t k = 0; k < n - 1; ++k) {
      std::size_t ra = find(edges[k].a);
      std::size_t rb = find(edges[k].b);
      if (ra == rb) throw Error("spanning tree contains a cycle");
      std::size_t node = n + k;
      left[k] = ra;
      right[k] = rb;
      height[k] = edges[k].weight;
      size[node] = size[ra] + size[rb];
      uf[ra] = uf[rb] = node;
    }

    auto fall_out = [&](std::size_t dendro, int cluster, double distance) {
      std::vector<std::size_t> stack{dendro};
      while (!stack.empty()) {
        std::size_t d = stack.back();
        stack.pop_back();
        if (d < n) {
          h.departure_[d] = distance;
          h.owner_[d] = cluster;
          h.nodes_[static_cast<std::size_t>(cluster)].points.push_back(d);
        } else {
          stack.push_back(left[d - n]);
          stack.push_back(right[d - n]);
        }
      }
    };

    std::vector<std::pair<std::size_t, int>> work{{total - 1, 0}};
    while (!work.empty()) {
      auto [dendro, cluster] = work.back();
      work.pop_back();
      std::size_t k = dendro - n;
      std::size_t l = left[k], r = right[k];
      double dist = height[k];
      bool big_l = size[l] >= min_cluster_size;
      bool big_r = size[r] >= min_cluster_size;
      if (big_l && big_r) {
        for (std::size_t child : {l, r}) {
          int id = static_cast<int>(h.nodes_.size());
          h.nodes_.push_back(CondensedNode{cluster, dist, 0.0, size[child], {}, {}, 0.0});
          h.nodes_[static_cast<std::size_t>(cluster)].children.push_back(id);
          work.emplace_back(child, id);
        }
      } else if (!big_l && !big_r) {
        fall_out(l, cluster, dist);
        fall_out(r, cluster, dist);
      } else if (!big_l) {
        fall_out(l, cluster, dist);
        work.emplace_back(r, cluster);
      } else {
        fall_out(r, cluster, dist);
        work.emplace_back(l, cluster);
      }
    }
  }

  // Deaths, stabilities, breakpoints.
  std::vector<double> breaks;
  for (CondensedNode& node : h.nodes_) {
    std::sort(node.points.begin(), node.points.end());
    double death = kInfinity;
    double lambda_birth = lambda_of(node.birth);
    double stability = 0.0;
    for (std::size_t p : node.points) {
      death = std::min(death, h.departure_[p]);
      stability += lambda_of(h.departure_[p]) - lambda_birth;
      breaks.push_back(h.departure_[p]);
    }
    for (int c : node.children) {
      const CondensedNode& child = h.nodes_[static_cast<std::size_t>(c)];
      death = std::min(death, child.birth);
      stability += (lambda_of(child.birth) - lambda_birth) * static_cast<double>(child.size);
      breaks.push_back(child.birth);
    }
    node.death = std::isinf(death) ? 0.0 : death;
    node.stability = stability;
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  h.breakpoints_ = std::move(breaks);

  // Excess of mass, bottom-up; children always have larger ids.
  const std::size_t count = h.nodes_.size();
  std::vector<bool> selected(count, false);
  std::vector<double> subtree(count, 0.0);
  for (std::size_t v = count; v-- > 1;) {
    const CondensedNode& node = h.nodes_[v];
    if (node.children.empty()) {
      selected[v] = true;
      subtree[v] = node.stability;
      continue;
    }
    double children = 0.0;
    for (int c : node.children) children += subtree[static_cast<std::size_t>(c)];
    if (children > node.stability) {
      subtree[v] = children;
    } else {
      selected[v] = true;
      subtree[v] = node.stability;
    }
  }
  if (h.nodes_[0].children.empty()) {
    h.eom_selection_.push_back(0);
  } else {
    std::vector<int> stack(h.nodes_[0].children.rbegin(), h.nodes_[0].children.rend());
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      if (selected[static_cast<std::size_t>(v)]) {
        h.eom_selection_.push_back(v);
      } else {
        const auto& ch = h.nodes_[static_cast<std::size_t>(v)].children;
        stack.insert(stack.end(), ch.rbegin(), ch.rend());
      }
    }
    std::sort(h.eom_selection_.begin(), h.eom_selection_.end());
  }
  return h;
}

void CondensedHierarchy::write_debug_jsonl(std::ostream& out) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const CondensedNode& node = nodes_[i];
    nlohmann::json j;
    j["node"] = i;
    j["parent"] = node.parent;
    j["birth"] = std::isinf(node.birth) ? nlohmann::json(nullptr) : nlohmann::json(node.birth);
    j["death"] = node.death;
    j["size"] = node.size;
    out << j.dump() << '\n';
  }
}

std::size_t Clustering::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), kNoise));
}

std::vector<int> canonical_labels(std::span<const int> labels) {
  std::map<int, int> renumber;
  std::vector<int> out(labels.size(), kNoise);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == kNoise) continue;
    auto [it, inserted] = renumber.emplace(labels[i], static_cast<int>(renumber.size()));
    out[i] = it->second;
  }
  return out;
}

bool same_partition(std::span<const int> a, std::span<const int> b) {
  return a.size() == b.size() && canonical_labels(a) == canonical_labels(b);
}

namespace {

struct Pick {
  int node;
  bool epsilon_mode;
};

Clustering label_picks(const CondensedHierarchy& h, const std::vector<Pick>& picks,
                       double epsilon) {
  Clustering out;
  out.labels.assign(h.num_points(), kNoise);
  out.epsilon = epsilon;
  int next = 0;
  for (const Pick& pick : picks) {
    std::vector<int> stack{pick.node};
    while (!stack.empty()) {
      const CondensedNode& node = h.node(stack.back());
      stack.pop_back();
      for (std::size_t p : node.points) {
        if (!pick.epsilon_mode || h.departure(p) < epsilon) out.labels[p] = next;
      }
      stack.insert(stack.end(), node.children.begin(), node.children.end());
    }
    ++next;
  }
  out.labels = canonical_labels(out.labels);
  int max_label = -1;
  for (int l : out.labels) max_label = std::max(max_label, l);
  out.num_clusters = static_cast<std::size_t>(max_label + 1);
  return out;
}

}  // namespace

Clustering extract_eom(const CondensedHierarchy& hierarchy) {
  std::vector<Pick> picks;
  for (int v : hierarchy.eom_selection()) picks.push_back({v, false});
  Clustering out = label_picks(hierarchy, picks, 0.0);
  out.mode = "eom";
  return out;
}

Clustering extract_hybrid(const CondensedHierarchy& hierarchy, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error("epsilon must be non-negative");
  std::vector<Pick> picks;
  std::vector<int> seen;
  for (int v : hierarchy.eom_selection()) {
    if (!(hierarchy.node(v).birth < epsilon)) {
      picks.push_back({v, false});
      continue;
    }
    int up = v;
    while (hierarchy.node(up).birth < epsilon) up = hierarchy.node(up).parent;
    if (std::find(seen.begin(), seen.end(), up) == seen.end()) {
      seen.push_back(up);
      picks.push_back({up, true});
    }
  }
  Clustering out = label_picks(hierarchy, picks, epsilon);
  out.mode = "hybrid";
  return out;
}

EpsilonSweep::EpsilonSweep(const CondensedHierarchy& hierarchy, double d_min, double d_max)
    : hierarchy_(&hierarchy), d_min_(d_min), d_max_(d_max) {
  if (d_max < d_min) throw Error("distance range is inverted");
}

std::size_t EpsilonSweep::interval_of(double epsilon) const {
  const auto& b = hierarchy_->breakpoints();
  return static_cast<std::size_t>(std::lower_bound(b.begin(), b.end(), epsilon) - b.begin());
}

// Interval k is (b[k-1], b[k]], with [0, b[0]] first and (b.back(), inf) last.
const std::vector<int>& EpsilonSweep::partition_of_interval(std::size_t k) {
  auto it = partitions_.find(k);
  if (it != partitions_.end()) return it->second;
  const auto& b = hierarchy_->breakpoints();
  double eps = k < b.size() ? b[k] : (b.empty() ? 1.0 : 2.0 * b.back() + 1.0);
  return partitions_.emplace(k, extract_hybrid(*hierarchy_, eps).labels).first->second;
}

std::pair<double, double> EpsilonSweep::stable_range(double epsilon) {
  const auto& b = hierarchy_->breakpoints();
  const std::size_t last = b.size();
  std::size_t k = interval_of(epsilon);
  std::size_t lo = k;
  std::size_t hi = k;
  const std::vector<int> mine = partition_of_interval(k);
  while (lo > 0 && partition_of_interval(lo - 1) == mine) --lo;
  while (hi < last && partition_of_interval(hi + 1) == mine) ++hi;
  double e_lo = lo == 0 ? 0.0 : b[lo - 1];
  double e_hi = hi == last ? kInfinity : b[hi];
  return {e_lo, e_hi};
}

double EpsilonSweep::persistence(const Clustering& clustering) {
  if (d_max_ <= d_min_) return 1.0;
  auto [lo, hi] = stable_range(clustering.epsilon);
  double width = std::min(hi, d_max_) - std::max(lo, d_min_);
  return std::clamp(width / (d_max_ - d_min_), 0.0, 1.0);
}

double clustering_persistence(const CondensedHierarchy& hierarchy,
                              const Clustering& clustering, double d_min, double d_max) {
  EpsilonSweep sweep(hierarchy, d_min, d_max);
  return sweep.persistence(clustering);
}

}  // namespace crashdedup
