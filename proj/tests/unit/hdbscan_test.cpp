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

#include <random>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "crashdedup/errors.hpp"
#include "oracles.hpp"

namespace crashdedup {
namespace {

PointSet line(std::vector<double> xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return PointSet::FromRows(rows, false);
}

PointSet two_pairs() { return line({0.0, 0.1, 10.1, 10.2}); }

TEST(PointSet, RejectsNonUnitRows) {
  EXPECT_THROW(PointSet::FromRows({{1.0, 1.0}}), Error);
  EXPECT_NO_THROW(PointSet::FromRows({{0.6, 0.8}}));
  EXPECT_THROW(PointSet::FromRows({{1.0}, {1.0, 0.0}}, false), Error);
}

TEST(DistanceRange, SmallestAndLargestPositive) {
  auto [lo, hi] = distance_range(line({0.0, 0.0, 1.0, 3.0}));
  EXPECT_DOUBLE_EQ(lo, 1.0);
  EXPECT_DOUBLE_EQ(hi, 3.0);
  auto [z0, z1] = distance_range(line({2.0, 2.0}));
  EXPECT_EQ(z0, 0.0);
  EXPECT_EQ(z1, 0.0);
}

TEST(MutualReachability, SinglePointCoreCollapsesToDistance) {
  std::mt19937_64 rng(1);
  auto rows = oracle::random_unit_vectors(rng, 60, 16);
  PointSet p = PointSet::FromRows(rows);
  MutualReachability mr(p, 1);
  for (std::size_t a = 0; a < rows.size(); ++a)
    for (std::size_t b = 0; b < rows.size(); ++b)
      EXPECT_NEAR(mr(a, b), oracle::dist(rows[a], rows[b]), 1e-12);
}

TEST(MutualReachability, CollinearExample) {
  PointSet p = line({0.0, 1.0, 3.0});
  MutualReachability mr(p, 2);
  EXPECT_DOUBLE_EQ(mr.core_distance(0), 3.0);
  EXPECT_DOUBLE_EQ(mr.core_distance(1), 2.0);
  EXPECT_DOUBLE_EQ(mr(0, 1), 3.0);
  EXPECT_EQ(mr(1, 1), 0.0);
}

TEST(MutualReachability, CoincidentPoints) {
  PointSet p = line({5.0, 5.0});
  EXPECT_EQ(MutualReachability(p, 1)(0, 1), 0.0);
}

TEST(MutualReachability, MatchesDenseMatrix) {
  std::mt19937_64 rng(2);
  for (std::size_t m_pts : {1u, 2u, 4u}) {
    auto rows = oracle::random_unit_vectors(rng, 40, 5);
    auto expected = oracle::mutual_reachability_matrix(rows, m_pts);
    PointSet points = PointSet::FromRows(rows);
    MutualReachability mr(points, m_pts);
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (std::size_t b = 0; b < rows.size(); ++b) EXPECT_NEAR(mr(a, b), expected[a][b], 1e-12);
  }
}

TEST(MutualReachability, RejectsTooLargeNeighbourCount) {
  PointSet p = line({0.0, 1.0, 2.0});
  EXPECT_THROW(MutualReachability(p, 3), Error);
  EXPECT_THROW(MutualReachability(p, 0), Error);
}

TEST(BuildMst, Triangle) {
  MSTree t = build_mst(line({0.0, 1.0, 3.0}), 1);
  ASSERT_EQ(t.edges.size(), 2u);
  EXPECT_DOUBLE_EQ(t.total_weight(), 3.0);
}

TEST(BuildMst, TwoPoints) {
  MSTree t = build_mst(line({0.0, 2.5}), 1);
  ASSERT_EQ(t.edges.size(), 1u);
  EXPECT_EQ(t.edges[0].a, 0u);
  EXPECT_EQ(t.edges[0].b, 1u);
  EXPECT_DOUBLE_EQ(t.edges[0].weight, 2.5);
}

TEST(BuildMst, MatchesDensePrim) {
  std::mt19937_64 rng(3);
  for (std::size_t m_pts : {1u, 2u, 3u, 5u}) {
    auto rows = oracle::random_unit_vectors(rng, 50, 8);
    MSTree t = build_mst(PointSet::FromRows(rows), m_pts);
    double expected = oracle::prim_total_weight(oracle::mutual_reachability_matrix(rows, m_pts));
    EXPECT_NEAR(t.total_weight(), expected, 1e-9);
  }
}

TEST(BuildMst, SpanningSortedAcyclic) {
  std::mt19937_64 rng(4);
  auto rows = oracle::random_unit_vectors(rng, 80, 6);
  MSTree t = build_mst(PointSet::FromRows(rows), 2);
  ASSERT_EQ(t.edges.size(), 79u);
  std::vector<std::size_t> parent(80);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (std::size_t i = 0; i < t.edges.size(); ++i) {
    const auto& e = t.edges[i];
    EXPECT_LT(e.a, e.b);
    EXPECT_GE(e.weight, 0.0);
    if (i) EXPECT_LE(t.edges[i - 1].weight, e.weight);
    ASSERT_NE(find(e.a), find(e.b));
    parent[find(e.a)] = find(e.b);
  }
}

TEST(BuildMst, TiesResolvedByEndpoints) {
  // Equilateral configuration: every edge weighs the same.
  MSTree t = build_mst(line({0.0, 1.0, 2.0, 3.0}), 1);
  ASSERT_EQ(t.edges.size(), 3u);
  EXPECT_EQ(t.edges[0].a, 0u);
  EXPECT_EQ(t.edges[1].a, 1u);
  EXPECT_EQ(t.edges[2].a, 2u);
}

TEST(Condense, TwoTightPairs) {
  CondensedHierarchy h = condense(build_mst(two_pairs(), 1), 2);
  ASSERT_EQ(h.nodes().size(), 3u);
  const auto& root = h.node(0);
  EXPECT_EQ(root.size, 4u);
  ASSERT_EQ(root.children.size(), 2u);
  for (int c : root.children) {
    EXPECT_NEAR(h.node(c).birth, 10.0, 1e-9);
    EXPECT_EQ(h.node(c).size, 2u);
    EXPECT_EQ(h.node(c).parent, 0);
  }
}

TEST(Condense, SingleBlobIsRootOnly) {
  CondensedHierarchy h = condense(build_mst(line({0.0, 1.0, 2.0, 3.0, 4.0}), 1), 2);
  EXPECT_EQ(h.nodes().size(), 1u);
  EXPECT_EQ(h.eom_selection(), (std::vector<int>{0}));
}

TEST(Condense, ChainMatchesSingleLinkage) {
  std::vector<double> xs = {0, 1, 2, 4, 8};
  PointSet p = line(xs);
  MSTree mst = build_mst(p, 1);
  std::vector<double> weights;
  for (const auto& e : mst.edges) weights.push_back(e.weight);
  EXPECT_EQ(weights, oracle::single_linkage_merges(xs));
  CondensedHierarchy h = condense(mst, 2);
  // Every merge in the chain absorbs a singleton, so nothing qualifies as a split.
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  EXPECT_EQ(oracle::qualifying_merges(rows, 2), 0u);
  EXPECT_EQ(h.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(h.departure(4), 4.0);
  EXPECT_DOUBLE_EQ(h.departure(3), 2.0);
  EXPECT_DOUBLE_EQ(h.departure(0), 1.0);
}

TEST(Condense, NodeCountAndDeparturesMatchSingleLinkage) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 40, 3);
    PointSet p = PointSet::FromRows(rows);
    CondensedHierarchy h = condense(build_mst(p, 1), 2);
    EXPECT_EQ(h.nodes().size(), 1 + 2 * oracle::qualifying_merges(rows, 2));
    // With clusters of two allowed, a point falls out exactly at its
    // nearest-neighbour distance.
    auto d = oracle::distance_matrix(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double nn = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < rows.size(); ++j)
        if (j != i) nn = std::min(nn, d[i][j]);
      EXPECT_NEAR(h.departure(i), nn, 1e-12);
    }
  }
}

TEST(Condense, StructuralInvariants) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 60, 4);
    CondensedHierarchy h = condense(build_mst(PointSet::FromRows(rows), 1), 3);
    std::size_t owned = 0;
    for (std::size_t id = 0; id < h.nodes().size(); ++id) {
      const auto& n = h.node(static_cast<int>(id));
      owned += n.points.size();
      EXPECT_GE(n.size, 3u);
      EXPECT_GE(n.stability, 0.0);
      if (n.parent >= 0) EXPECT_LE(n.birth, h.node(n.parent).death + 1e-12);
      std::size_t sub = n.points.size();
      for (int c : n.children) sub += h.node(c).size;
      EXPECT_EQ(sub, n.size);
    }
    EXPECT_EQ(owned, rows.size());
    EXPECT_TRUE(std::is_sorted(h.breakpoints().begin(), h.breakpoints().end()));
  }
}

TEST(Condense, DebugDumpHasOneLinePerNode) {
  CondensedHierarchy h = condense(build_mst(two_pairs(), 1), 2);
  std::ostringstream out;
  h.write_debug_jsonl(out);
  std::istringstream in(out.str());
  std::string l;
  std::size_t lines = 0;
  while (std::getline(in, l)) {
    auto j = nlohmann::json::parse(l);
    for (const char* key : {"node", "parent", "birth", "death", "size"})
      EXPECT_TRUE(j.contains(key)) << key;
    ++lines;
  }
  EXPECT_EQ(lines, h.nodes().size());
}

TEST(ExtractHybrid, ZeroEpsilonIsPlainEom) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 50, 3);
    CondensedHierarchy h = condense(build_mst(PointSet::FromRows(rows), 1), 2);
    EXPECT_EQ(extract_hybrid(h, 0.0).labels, extract_eom(h).labels);
  }
}

TEST(ExtractHybrid, LargeEpsilonMergesEverything) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 50, 3);
    MSTree mst = build_mst(PointSet::FromRows(rows), 1);
    CondensedHierarchy h = condense(mst, 2);
    Clustering c = extract_hybrid(h, mst.edges.back().weight * 1.0001);
    EXPECT_EQ(c.num_clusters, 1u);
    EXPECT_EQ(c.noise_count(), 0u);
  }
}

TEST(ExtractHybrid, TwoPairsMatchDbscanStar) {
  PointSet p = two_pairs();
  CondensedHierarchy h = condense(build_mst(p, 1), 2);
  Clustering c = extract_hybrid(h, 1.0);
  EXPECT_EQ(c.labels, (std::vector<int>{0, 0, 1, 1}));
  std::vector<std::vector<double>> rows = {{0.0}, {0.1}, {10.1}, {10.2}};
  EXPECT_TRUE(oracle::same_partition(
      c.labels, oracle::dbscan_star(oracle::mutual_reachability_matrix(rows, 1), 1.0)));
}

TEST(ExtractHybrid, LabelsContiguousInFirstSeenOrder) {
  std::mt19937_64 rng(9);
  auto rows = oracle::random_unit_vectors(rng, 80, 3);
  CondensedHierarchy h = condense(build_mst(PointSet::FromRows(rows), 1), 2);
  for (double eps : h.breakpoints()) {
    Clustering c = extract_hybrid(h, eps);
    EXPECT_EQ(c.labels, canonical_labels(c.labels));
    int top = -1;
    for (int l : c.labels) top = std::max(top, l);
    EXPECT_EQ(static_cast<std::size_t>(top + 1), c.num_clusters);
    std::map<int, std::size_t> sizes;
    for (int l : c.labels)
      if (l != kNoise) ++sizes[l];
    for (const auto& [l, n] : sizes) EXPECT_GE(n, 2u);
  }
}

TEST(ExtractHybrid, ClusterCountNonIncreasingInEpsilon) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 60, 3);
    CondensedHierarchy h = condense(build_mst(PointSet::FromRows(rows), 1), 2);
    std::size_t previous = extract_hybrid(h, 0.0).num_clusters;
    for (double eps : h.breakpoints()) {
      for (double probe : {eps, eps * 1.0000001}) {
        std::size_t k = extract_hybrid(h, probe).num_clusters;
        EXPECT_LE(k, previous);
        previous = k;
      }
    }
  }
}

TEST(Partitions, CanonicalLabelsAndEquality) {
  std::vector<int> a = {5, 5, kNoise, 2, 2};
  EXPECT_EQ(canonical_labels(a), (std::vector<int>{0, 0, kNoise, 1, 1}));
  EXPECT_TRUE(same_partition(a, std::vector<int>{1, 1, kNoise, 0, 0}));
  EXPECT_FALSE(same_partition(a, std::vector<int>{1, 1, 2, 0, 0}));
  EXPECT_FALSE(same_partition(a, std::vector<int>{1, 1, kNoise, 1, 0}));
}

TEST(Persistence, TwoPairsExample) {
  CondensedHierarchy h = condense(build_mst(two_pairs(), 1), 2);
  Clustering two = extract_hybrid(h, 1.0);
  ASSERT_EQ(two.num_clusters, 2u);
  EXPECT_NEAR(clustering_persistence(h, two, 0.1, 10.05), 9.9 / 9.95, 1e-12);
}

TEST(Persistence, SingleClusterEverywhereIsOne) {
  PointSet p = line({0.0, 1.0, 2.0, 3.0});
  CondensedHierarchy h = condense(build_mst(p, 1), 2);
  auto [lo, hi] = distance_range(p);
  EXPECT_DOUBLE_EQ(clustering_persistence(h, extract_hybrid(h, 0.5), lo, hi), 1.0);
}

TEST(Persistence, EqualRangeIsOne) {
  PointSet p = line({0.0, 1.0});
  CondensedHierarchy h = condense(build_mst(p, 1), 2);
  EXPECT_DOUBLE_EQ(clustering_persistence(h, extract_hybrid(h, 0.5), 1.0, 1.0), 1.0);
}

TEST(Persistence, DenseSpectrumGivesNarrowIntervals) {
  // Geometric spacing: each gap is a new split level.
  std::vector<double> xs;
  double x = 0.0;
  for (int i = 0; i < 40; ++i) {
    xs.push_back(x);
    x += 1.0 + 0.01 * i;
  }
  std::vector<double> pairs;
  for (double v : xs) {
    pairs.push_back(v);
    pairs.push_back(v + 0.001);
  }
  PointSet p = line(pairs);
  CondensedHierarchy h = condense(build_mst(p, 1), 2);
  auto [lo, hi] = distance_range(p);
  EpsilonSweep sweep(h, lo, hi);
  double smallest = 1.0;
  for (double eps : h.breakpoints()) smallest = std::min(smallest, sweep.persistence(extract_hybrid(h, eps)));
  EXPECT_LT(smallest, 0.01);
}

TEST(Persistence, AlwaysWithinUnitInterval) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto rows = oracle::random_unit_vectors(rng, 50, 3);
    PointSet p = PointSet::FromRows(rows);
    CondensedHierarchy h = condense(build_mst(p, 1), 2);
    auto [lo, hi] = distance_range(p);
    EpsilonSweep sweep(h, lo, hi);
    for (double eps : h.breakpoints()) {
      double v = sweep.persistence(extract_hybrid(h, eps));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

// The stable range is exactly where extraction keeps returning the partition.
TEST(Persistence, StableRangeMatchesDirectScan) {
  std::mt19937_64 rng(12);
  auto rows = oracle::random_unit_vectors(rng, 30, 3);
  PointSet p = PointSet::FromRows(rows);
  CondensedHierarchy h = condense(build_mst(p, 1), 2);
  auto [lo, hi] = distance_range(p);
  EpsilonSweep sweep(h, lo, hi);
  const auto& bp = h.breakpoints();
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    double mid = 0.5 * (bp[i] + bp[i + 1]);
    auto labels = extract_hybrid(h, mid).labels;
    auto [r_lo, r_hi] = sweep.stable_range(mid);
    EXPECT_LE(r_lo, mid);
    EXPECT_GE(r_hi, mid);
    for (double probe : bp) {
      bool inside = probe > r_lo && probe <= r_hi;
      if (inside) EXPECT_TRUE(same_partition(extract_hybrid(h, probe).labels, labels)) << probe;
    }
  }
}

}  // namespace
}  // namespace crashdedup
