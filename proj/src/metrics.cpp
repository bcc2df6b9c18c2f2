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

#include "crashdedup/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crashdedup/csv.hpp"
#include "crashdedup/errors.hpp"
#include "crashdedup/hdbscan.hpp"

namespace crashdedup {

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  auto rows = read_csv(path);
  if (rows.empty()) throw Error(path.string() + ": empty ground-truth file");
  const auto& header = rows.front();
  if (header.size() < 2 || header[0] != "id" || header[1] != "label" ||
      (header.size() >= 3 && header[2] != "bug_type") || header.size() > 3)
    throw Error(path.string() + ": header must be id,label[,bug_type]");
  const bool typed = header.size() == 3;

  GroundTruth truth;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw Error(path.string() + ": row " + std::to_string(r + 1) + " has " +
                  std::to_string(row.size()) + " fields");
    if (!truth.labels.emplace(row[0], row[1]).second)
      throw Error(path.string() + ": id '" + row[0] + "' listed twice");
    if (typed && !row[2].empty()) {
      auto [it, inserted] = truth.bug_types.emplace(row[1], row[2]);
      if (!inserted && it->second != row[2])
        throw Error(path.string() + ": label '" + row[1] + "' has conflicting bug types");
    }
  }
  return truth;
}

Contingency contingency(const std::map<std::string, std::string>& clusters,
                        const GroundTruth& truth) {
  std::vector<std::string> only_clusters, only_truth;
  for (const auto& [id, c] : clusters)
    if (!truth.labels.count(id)) only_clusters.push_back(id);
  for (const auto& [id, l] : truth.labels)
    if (!clusters.count(id)) only_truth.push_back(id);
  if (!only_clusters.empty() || !only_truth.empty()) {
    std::string msg = "clustering and ground truth cover different ids";
    auto list = [&](const char* what, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string("; only in ") + what + ":";
      for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += " " + ids[i];
      if (ids.size() > 20) msg += " ... (" + std::to_string(ids.size()) + " total)";
    };
    list("clustering", only_clusters);
    list("ground truth", only_truth);
    throw IdMismatchError(msg, std::move(only_clusters), std::move(only_truth));
  }

  Contingency t;
  std::set<std::string> label_set, cluster_set;
  for (const auto& [id, c] : clusters) {
    cluster_set.insert(c);
    label_set.insert(truth.labels.at(id));
  }
  t.labels.assign(label_set.begin(), label_set.end());
  t.clusters.assign(cluster_set.begin(), cluster_set.end());
  auto index_in = [](const std::vector<std::string>& v, const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), s) - v.begin());
  };
  t.counts.assign(t.labels.size(), std::vector<std::size_t>(t.clusters.size(), 0));
  t.label_sizes.assign(t.labels.size(), 0);
  t.cluster_sizes.assign(t.clusters.size(), 0);
  for (const auto& [id, c] : clusters) {
    std::size_t i = index_in(t.labels, truth.labels.at(id));
    std::size_t j = index_in(t.clusters, c);
    ++t.counts[i][j];
    ++t.label_sizes[i];
    ++t.cluster_sizes[j];
    ++t.total;
  }
  return t;
}

std::map<std::string, std::string> cluster_names(std::span<const std::string> ids,
                                                 std::span<const int> labels) {
  if (ids.size() != labels.size()) throw Error("ids and labels differ in length");
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < ids.size(); ++i)
    out[ids[i]] = labels[i] == kNoise ? "noise-" + ids[i] : std::to_string(labels[i]);
  return out;
}

PurityScores purity_scores(const Contingency& t) {
  if (t.total == 0) throw Error("cannot score an empty clustering");
  const double n = static_cast<double>(t.total);
  PurityScores s;
  for (std::size_t j = 0; j < t.clusters.size(); ++j) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < t.labels.size(); ++i) best = std::max(best, t.counts[i][j]);
    // (|C_j| / N) * max_i |L_i ∩ C_j| / |C_j|
    s.purity += static_cast<double>(best) / n;
  }
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    std::size_t best = 0;
    double best_f = 0.0;
    for (std::size_t j = 0; j < t.clusters.size(); ++j) {
      std::size_t both = t.counts[i][j];
      best = std::max(best, both);
      if (both == 0) continue;
      double precision = static_cast<double>(both) / static_cast<double>(t.cluster_sizes[j]);
      double recall = static_cast<double>(both) / static_cast<double>(t.label_sizes[i]);
      best_f = std::max(best_f, 2.0 * precision * recall / (precision + recall));
    }
    s.inverse_purity += static_cast<double>(best) / n;
    s.f_measure += static_cast<double>(t.label_sizes[i]) / n * best_f;
  }
  return s;
}

std::map<std::string, CountingScores> over_under(const Contingency& t) {
  std::map<std::string, CountingScores> out;
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    std::size_t clusters_hit = 0;
    std::set<std::size_t> partners;
    for (std::size_t j = 0; j < t.clusters.size(); ++j) {
      if (t.counts[i][j] == 0) continue;
      ++clusters_hit;
      for (std::size_t k = 0; k < t.labels.size(); ++k)
        if (k != i && t.counts[k][j] > 0) partners.insert(k);
    }
    out[t.labels[i]] = CountingScores{clusters_hit == 0 ? 0 : clusters_hit - 1, partners.size()};
  }
  return out;
}

std::map<std::string, TypeAggregate> aggregate_types(
    const std::map<std::string, CountingScores>& per_label,
    const std::map<std::string, std::string>& bug_types) {
  std::map<std::string, std::vector<CountingScores>> groups;
  for (const auto& [label, scores] : per_label) {
    auto it = bug_types.find(label);
    groups[it == bug_types.end() ? kUntypedBugType : it->second].push_back(scores);
  }
  std::map<std::string, TypeAggregate> out;
  for (const auto& [type, members] : groups) {
    if (members.empty()) continue;
    const double n = static_cast<double>(members.size());
    TypeAggregate a;
    a.labels = members.size();
    for (const auto& m : members) {
      a.over_mean += static_cast<double>(m.overcounting) / n;
      a.under_mean += static_cast<double>(m.undercounting) / n;
    }
    for (const auto& m : members) {
      double dover = static_cast<double>(m.overcounting) - a.over_mean;
      double dunder = static_cast<double>(m.undercounting) - a.under_mean;
      a.over_std += dover * dover / n;
      a.under_std += dunder * dunder / n;
    }
    a.over_std = std::sqrt(a.over_std);
    a.under_std = std::sqrt(a.under_std);
    out[type] = a;
  }
  return out;
}

EvalReport evaluate(const std::map<std::string, std::string>& clusters,
                    const GroundTruth& truth) {
  Contingency t = contingency(clusters, truth);
  EvalReport report;
  report.clusters = t.clusters.size();
  report.scores = purity_scores(t);
  report.per_label = over_under(t);
  for (std::size_t i = 0; i < t.labels.size(); ++i) report.label_sizes[t.labels[i]] = t.label_sizes[i];
  if (!truth.bug_types.empty()) report.per_type = aggregate_types(report.per_label, truth.bug_types);
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  j["clusters"] = report.clusters;
  j["purity"] = report.scores.purity;
  j["inverse_purity"] = report.scores.inverse_purity;
  j["f_measure"] = report.scores.f_measure;
  j["note"] = "noise points are counted as singleton clusters";
  nlohmann::json labels = nlohmann::json::object();
  for (const auto& [label, s] : report.per_label) {
    labels[label] = {{"size", report.label_sizes.at(label)},
                     {"overcounting", s.overcounting},
                     {"undercounting", s.undercounting}};
  }
  j["per_label"] = std::move(labels);
  if (!report.per_type.empty()) {
    nlohmann::json types = nlohmann::json::object();
    for (const auto& [type, a] : report.per_type) {
      types[type] = {{"labels", a.labels},
                     {"over_mean", a.over_mean},
                     {"over_std", a.over_std},
                     {"under_mean", a.under_mean},
                     {"under_std", a.under_std}};
    }
    j["per_type"] = std::move(types);
  }
  return j;
}

namespace {

std::string percent(double x) { return std::to_string(std::lround(x * 100.0)) + "%"; }

std::string fixed2(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

// Left-aligned first column, right-aligned others.
std::string table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::string pad(width[c] - row[c].size(), ' ');
      if (c == 0) {
        line += row[c] + pad;
      } else {
        line += "  " + pad + row[c];
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << table({{"clusters", std::to_string(report.clusters)},
                {"purity", percent(report.scores.purity)},
                {"inverse purity", percent(report.scores.inverse_purity)},
                {"F-measure", percent(report.scores.f_measure)}});
  out << "(noise points are counted as singleton clusters)\n\n";

  std::vector<std::vector<std::string>> labels{{"label", "size", "over", "under"}};
  for (const auto& [label, s] : report.per_label)
    labels.push_back({label, std::to_string(report.label_sizes.at(label)),
                      std::to_string(s.overcounting), std::to_string(s.undercounting)});
  out << table(labels);

  if (!report.per_type.empty()) {
    std::vector<std::vector<std::string>> types{
        {"bug type", "labels", "over mean", "over std", "under mean", "under std"}};
    for (const auto& [type, a] : report.per_type)
      types.push_back({type, std::to_string(a.labels), fixed2(a.over_mean), fixed2(a.over_std),
                       fixed2(a.under_mean), fixed2(a.under_std)});
    out << '\n' << table(types);
  }
  return out.str();
}

}  // namespace crashdedup
