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

// Ground-truth evaluation of a crash clustering: purity, inverse purity and
// F-measure over the label/cluster contingency table, plus per-label over-
// and undercounting aggregated by bug type.

#ifndef CRASHDEDUP_METRICS_HPP_
#define CRASHDEDUP_METRICS_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace crashdedup {

struct GroundTruth {
  std::map<std::string, std::string> labels;     // crash id -> bug label
  std::map<std::string, std::string> bug_types;  // bug label -> type (optional)
};

// CSV with header `id,label[,bug_type]`.
GroundTruth load_ground_truth(const std::filesystem::path& path);

// Rows are labels, columns clusters, both sorted by name.
struct Contingency {
  std::vector<std::string> labels;
  std::vector<std::string> clusters;
  std::vector<std::vector<std::size_t>> counts;  // [label][cluster]
  std::vector<std::size_t> label_sizes;
  std::vector<std::size_t> cluster_sizes;
  std::size_t total = 0;
};

// Throws IdMismatchError when the two id sets differ.
Contingency contingency(const std::map<std::string, std::string>& clusters,
                        const GroundTruth& truth);

// Cluster names for integer labels; each kNoise point becomes its own
// "noise-<id>" singleton.
std::map<std::string, std::string> cluster_names(std::span<const std::string> ids,
                                                 std::span<const int> labels);

struct PurityScores {
  double purity = 0.0;
  double inverse_purity = 0.0;
  double f_measure = 0.0;
};

PurityScores purity_scores(const Contingency& table);

struct CountingScores {
  std::size_t overcounting = 0;
  std::size_t undercounting = 0;
};

std::map<std::string, CountingScores> over_under(const Contingency& table);

struct TypeAggregate {
  std::size_t labels = 0;
  double over_mean = 0.0;
  double over_std = 0.0;  // population standard deviation
  double under_mean = 0.0;
  double under_std = 0.0;
};

inline constexpr const char* kUntypedBugType = "Other";

// Labels without a type fall under "Other"; empty groups are omitted.
std::map<std::string, TypeAggregate> aggregate_types(
    const std::map<std::string, CountingScores>& per_label,
    const std::map<std::string, std::string>& bug_types);

struct EvalReport {
  std::size_t clusters = 0;  // noise singletons included
  PurityScores scores;
  std::map<std::string, CountingScores> per_label;
  std::map<std::string, std::size_t> label_sizes;
  std::map<std::string, TypeAggregate> per_type;  // empty without bug types
};

EvalReport evaluate(const std::map<std::string, std::string>& clusters,
                    const GroundTruth& truth);

nlohmann::json to_json(const EvalReport& report);
// Aligned plain-text table, percentages rounded to the nearest integer.
std::string format_report(const EvalReport& report);

}  // namespace crashdedup

#endif  // CRASHDEDUP_METRICS_HPP_
