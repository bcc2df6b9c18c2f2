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

// Staged pipeline behind the command-line tool. Every stage reads the
// previous stage's files from the output directory and writes its own:
//
//   prepare   prepared.jsonl, duplicates.csv
//   embed     vectors.jsonl (and the embedding cache)
//   cluster   clusters.csv, selection.json, condensed_tree.jsonl on request
//   evaluate  report.json, report.txt
//
// plus config.json and run_log.json, which carry no timestamps so reruns on
// unchanged input are byte-identical.

#ifndef CRASHDEDUP_PIPELINE_HPP_
#define CRASHDEDUP_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crashdedup/metrics.hpp"
#include "crashdedup/preprocess.hpp"
#include "crashdedup/provider.hpp"
#include "crashdedup/search.hpp"
#include "crashdedup/trace_ingest.hpp"

namespace crashdedup {

std::string version();

// Texts longer than this are cut at the last line break before the limit
// prior to embedding.
inline constexpr std::size_t kMaxEmbedTextBytes = 100000;

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> truth;
  std::optional<std::filesystem::path> cache_path;
  SourceConfig sources;
  EmbeddingProviderConfig provider;
  SearchParams search;
  CorpusLayout layout;
  bool dump_tree = false;

  void validate() const;
  // Explicit cache_path, else $DEDUP_CACHE, else <output_dir>/embedding_cache.jsonl.
  std::filesystem::path resolved_cache_path() const;
};

nlohmann::json to_json(const RunConfig& config);
// SHA-256 of the serialized algorithm settings (paths excluded).
std::string config_hash(const RunConfig& config);

// Cuts `text` to at most `limit` bytes, at a line boundary when there is one.
std::string cap_text(const std::string& text, std::size_t limit, bool* truncated = nullptr);

struct PrepareSummary {
  std::size_t total = 0;
  std::size_t prepared = 0;
  std::size_t representatives = 0;
  std::size_t duplicate_classes = 0;  // representatives standing for 2+ records
  std::vector<std::pair<std::string, std::string>> unpreparable;  // id, reason
};

struct EmbedSummary {
  std::size_t vectors = 0;
  std::size_t unique_texts = 0;
  std::size_t truncated_texts = 0;
  EmbedStats stats;
};

struct ClusterSummary {
  std::size_t points = 0;
  std::size_t clusters = 0;
  std::size_t noise = 0;
  double epsilon = 0.0;
  double dbcv = 0.0;
  double persistence = 0.0;
  std::size_t effective_count = 0;
  std::size_t candidates_considered = 0;
};

// Each command takes the output directory's lock for its duration.
PrepareSummary cmd_prepare(const RunConfig& config);
// Throws ProviderError whose unresolved() lists crash ids when the provider
// fails; vectors obtained so far stay in the cache.
EmbedSummary cmd_embed(const RunConfig& config);
ClusterSummary cmd_cluster(const RunConfig& config);
EvalReport cmd_evaluate(const RunConfig& config);

struct RunSummary {
  PrepareSummary prepare;
  EmbedSummary embed;
  ClusterSummary cluster;
  std::optional<EvalReport> evaluation;  // when a ground truth is configured
};
RunSummary cmd_run(const RunConfig& config);

// Reads clusters.csv (`id,cluster`).
std::map<std::string, std::string> read_clusters_csv(const std::filesystem::path& path);

// Exclusive ownership of an output directory through an O_EXCL lock file.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& output_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::filesystem::path path_;
};

}  // namespace crashdedup

#endif  // CRASHDEDUP_PIPELINE_HPP_
