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

// Density-based clustering core: mutual reachability, the minimum spanning
// tree over it, the condensed cluster tree, and flat extraction that mixes
// excess-of-mass selection with DBSCAN*-style clusters below a distance
// threshold epsilon.
//
// Everything epsilon-independent (MST, condensed tree, EOM selection) is
// computed once; extraction at a given epsilon is linear in the tree size.

#ifndef CRASHDEDUP_HDBSCAN_HPP_
#define CRASHDEDUP_HDBSCAN_HPP_

#include <cstddef>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crashdedup {

inline constexpr int kNoise = -1;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class PointSet {
 public:
  // `coordinates` is row-major, ids.size() rows of `dim` values. When
  // `require_unit_norm` is set every row must have norm 1 within 1e-6.
  PointSet(std::vector<std::string> ids, std::size_t dim, std::vector<double> coordinates,
           bool require_unit_norm = true);

  static PointSet FromRows(const std::vector<std::vector<double>>& rows,
                           bool require_unit_norm = true);
  static PointSet FromRows(std::vector<std::string> ids,
                           const std::vector<std::vector<double>>& rows,
                           bool require_unit_norm = true);

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> point(std::size_t i) const {
    return {coordinates_.data() + i * dim_, dim_};
  }
  double distance(std::size_t a, std::size_t b) const;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_;
  std::vector<double> coordinates_;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Smallest and largest positive pairwise distance; {0, 0} when every point
// coincides or there are fewer than two points.
std::pair<double, double> distance_range(const PointSet& points);

class MutualReachability {
 public:
  // Core distance = distance to the m_pts-th nearest other point.
  // Requires m_pts >= 1 and, for two or more points, m_pts <= n - 1.
  MutualReachability(const PointSet& points, std::size_t m_pts);
  MutualReachability(PointSet&&, std::size_t) = delete;  // keeps a reference

  double operator()(std::size_t a, std::size_t b) const;
  double core_distance(std::size_t i) const { return core_[i]; }
  std::size_t m_pts() const { return m_pts_; }
  const PointSet& points() const { return *points_; }

 private:
  const PointSet* points_;
  std::size_t m_pts_;
  std::vector<double> core_;
};

MutualReachability mutual_reachability(const PointSet& points, std::size_t m_pts);
MutualReachability mutual_reachability(PointSet&&, std::size_t) = delete;

struct MstEdge {
  std::size_t a = 0;  // a < b
  std::size_t b = 0;
  double weight = 0.0;
};

struct MSTree {
  std::size_t num_points = 0;
  std::vector<MstEdge> edges;  // ascending by (weight, a, b)

  double total_weight() const;
};

// Exact O(n^2) Prim over mutual reachability. Equal weights are ordered by
// (smaller endpoint, larger endpoint), which makes the tree unique.
MSTree build_mst(const PointSet& points, std::size_t m_pts);
MSTree build_mst(const MutualReachability& reachability);

struct CondensedNode {
  int parent = -1;
  double birth = kInfinity;  // distance at which it splits off its parent
  double death = 0.0;        // distance at which it splits or empties
  std::size_t size = 0;      // points in the subtree
  std::vector<int> children;
  std::vector<std::size_t> points;  // points that fall out of this node
  double stability = 0.0;
};

class CondensedHierarchy {
 public:
  std::size_t num_points() const { return departure_.size(); }
  std::size_t min_cluster_size() const { return min_cluster_size_; }
  const std::vector<CondensedNode>& nodes() const { return nodes_; }
  const CondensedNode& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  // Distance at which a point leaves its innermost node, and that node.
  double departure(std::size_t point) const { return departure_[point]; }
  int owner(std::size_t point) const { return owner_[point]; }

  // Excess-of-mass selection (epsilon-independent). The root is only
  // selected when the tree has no other node.
  const std::vector<int>& eom_selection() const { return eom_selection_; }

  // Sorted distinct distances at which some extraction can change: births of
  // non-root nodes and point departures.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  // One JSON object per line: {node, parent, birth, death, size}.
  void write_debug_jsonl(std::ostream& out) const;

 private:
  friend CondensedHierarchy condense(const MSTree& mst, std::size_t min_cluster_size);

  std::size_t min_cluster_size_ = 2;
  std::vector<CondensedNode> nodes_;
  std::vector<double> departure_;
  std::vector<int> owner_;
  std::vector<int> eom_selection_;
  std::vector<double> breakpoints_;
};

CondensedHierarchy condense(const MSTree& mst, std::size_t min_cluster_size);

struct Clustering {
  std::vector<int> labels;  // cluster id in 0..k-1 or kNoise
  double epsilon = 0.0;
  std::string mode;         // "eom" or "hybrid"
  std::size_t num_clusters = 0;

  std::size_t noise_count() const;
};

// Labels renumbered by order of first appearance; noise stays kNoise.
std::vector<int> canonical_labels(std::span<const int> labels);
bool same_partition(std::span<const int> a, std::span<const int> b);

// Plain HDBSCAN: every point in a selected node's subtree gets its label.
Clustering extract_eom(const CondensedHierarchy& hierarchy);

// EOM selection, then every selected node born below `epsilon` is replaced by
// its lowest ancestor born at or above it, i.e. splits below epsilon are
// undone. Inside such a node, points that fall out at a distance >= epsilon
// are noise, as they would be for DBSCAN* at level epsilon.
Clustering extract_hybrid(const CondensedHierarchy& hierarchy, double epsilon);

// Persistence of extracted clusterings: the width of the maximal epsilon
// range giving the same partition, clipped to [d_min, d_max] and divided by
// d_max - d_min. Caches partitions per breakpoint interval, so reuse one
// sweep for many clusterings of the same hierarchy. Not thread-safe.
class EpsilonSweep {
 public:
  EpsilonSweep(const CondensedHierarchy& hierarchy, double d_min, double d_max);

  double persistence(const Clustering& clustering);
  // Unclipped [lo, hi] range of epsilon yielding the partition at `epsilon`.
  std::pair<double, double> stable_range(double epsilon);

 private:
  const std::vector<int>& partition_of_interval(std::size_t k);
  std::size_t interval_of(double epsilon) const;

  const CondensedHierarchy* hierarchy_;
  double d_min_;
  double d_max_;
  std::map<std::size_t, std::vector<int>> partitions_;
};

double clustering_persistence(const CondensedHierarchy& hierarchy,
                              const Clustering& clustering, double d_min, double d_max);

}  // namespace crashdedup

#endif  // CRASHDEDUP_HDBSCAN_HPP_
