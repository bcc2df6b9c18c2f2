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

#include "crashdedup/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "crashdedup/csv.hpp"
#include "crashdedup/digest.hpp"
#include "crashdedup/embedding.hpp"
#include "crashdedup/embedding_cache.hpp"
#include "crashdedup/errors.hpp"
#include "crashdedup/hdbscan.hpp"

#ifndef CRASHDEDUP_VERSION
#define CRASHDEDUP_VERSION "0.0.0"
#endif

namespace crashdedup {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kPrepared = "prepared.jsonl";
constexpr const char* kDuplicates = "duplicates.csv";
constexpr const char* kVectors = "vectors.jsonl";
constexpr const char* kClusters = "clusters.csv";
constexpr const char* kSelection = "selection.json";
constexpr const char* kTree = "condensed_tree.jsonl";
constexpr const char* kReportJson = "report.json";
constexpr const char* kReportText = "report.txt";
constexpr const char* kConfig = "config.json";
constexpr const char* kRunLog = "run_log.json";
constexpr const char* kLockFile = ".crashdedup.lock";

// Write to a sibling temporary and rename, so readers never see half a file.
void write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void require_file(const fs::path& path, const char* stage) {
  if (!fs::exists(path))
    throw Error(path.string() + " not found; run `" + stage + "` first");
}

json load_run_log(const fs::path& out_dir) {
  fs::path p = out_dir / kRunLog;
  if (!fs::exists(p)) return json::object();
  try {
    return json::parse(read_file(p));
  } catch (const json::exception&) {
    return json::object();
  }
}

void update_run_log(const RunConfig& config, const char* section, json value) {
  json log = load_run_log(config.output_dir);
  log["version"] = version();
  log["config_hash"] = config_hash(config);
  log[section] = std::move(value);
  write_file(config.output_dir / kRunLog, log.dump(2) + "\n");
  write_file(config.output_dir / kConfig, to_json(config).dump(2) + "\n");
}

void begin_stage(const RunConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
}

std::string corpus_hash(const std::vector<CrashRecord>& records) {
  std::string acc;
  for (const auto& r : records) {
    acc += r.id;
    acc += '\0';
    acc += sha256_hex(r.trace_text);
    acc += '\0';
    acc += r.asan_text ? sha256_hex(*r.asan_text) : std::string("-");
    acc += '\n';
  }
  return sha256_hex(acc);
}

std::map<std::string, std::string> read_duplicates(const fs::path& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "id" || rows[0][1] != "representative")
    throw Error(path.string() + ": expected header `id,representative`");
  std::map<std::string, std::string> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw Error(path.string() + ": malformed row " + std::to_string(i + 1));
    out[rows[i][0]] = rows[i][1];
  }
  return out;
}

std::vector<std::string> unpreparable_ids(const fs::path& out_dir) {
  json log = load_run_log(out_dir);
  std::vector<std::string> ids;
  if (log.contains("prepare") && log["prepare"].contains("unpreparable"))
    for (const auto& entry : log["prepare"]["unpreparable"]) ids.push_back(entry.at("id"));
  return ids;
}

PrepareSummary prepare_stage(const RunConfig& config) {
  std::vector<CrashRecord> records = load_corpus(config.corpus, config.layout);
  PrepareSummary summary;
  summary.total = records.size();

  std::vector<PreparedRecord> prepared;
  for (const auto& r : records) {
    PrepareResult result = prepare(r, config.sources);
    if (result.ok()) {
      prepared.push_back(std::move(*result.record));
    } else {
      summary.unpreparable.emplace_back(result.id, result.reason);
    }
  }
  summary.prepared = prepared.size();
  DuplicateCollapse collapse = collapse_duplicates(std::move(prepared));
  summary.representatives = collapse.representatives.size();
  std::map<std::string, std::size_t> class_size;
  for (const auto& [id, rep] : collapse.assignment) ++class_size[rep];
  for (const auto& [rep, n] : class_size)
    if (n > 1) ++summary.duplicate_classes;

  write_prepared_jsonl(config.output_dir / kPrepared, collapse.representatives);
  std::string dup = "id,representative\n";
  for (const auto& [id, rep] : collapse.assignment) dup += csv_field(id) + ',' + csv_field(rep) + '\n';
  write_file(config.output_dir / kDuplicates, dup);

  json unprep = json::array();
  for (const auto& [id, reason] : summary.unpreparable) unprep.push_back({{"id", id}, {"reason", reason}});
  update_run_log(config, "prepare",
                 {{"corpus_hash", corpus_hash(records)},
                  {"total", summary.total},
                  {"prepared", summary.prepared},
                  {"representatives", summary.representatives},
                  {"duplicate_classes", summary.duplicate_classes},
                  {"unpreparable", unprep}});
  return summary;
}

EmbedSummary embed_stage(const RunConfig& config) {
  require_file(config.output_dir / kPrepared, "prepare");
  std::vector<PreparedRecord> reps = read_prepared_jsonl(config.output_dir / kPrepared);

  // Per record and source: the hash of the text actually sent.
  std::map<std::string, std::map<SourceKind, std::string>> wanted;
  std::vector<TextItem> items;
  std::set<std::string> seen;
  json truncated = json::array();
  for (const auto& rec : reps) {
    for (const auto& [kind, text] : rec.texts) {
      if (!config.sources.enabled.count(kind)) continue;
      bool cut = false;
      std::string capped = cap_text(text, kMaxEmbedTextBytes, &cut);
      std::string hash = cut ? sha256_hex(capped) : rec.hashes.at(kind);
      if (cut) truncated.push_back({{"id", rec.id}, {"source", std::string(to_string(kind))}});
      wanted[rec.id][kind] = hash;
      if (seen.insert(hash).second) items.push_back({hash, std::move(capped)});
    }
    if (wanted[rec.id].empty())
      throw Error(rec.id + ": no enabled source in prepared.jsonl; rerun `prepare`");
  }

  EmbeddingCache cache(config.resolved_cache_path());
  auto provider = make_provider(config.provider);
  EmbedSummary summary;
  summary.unique_texts = items.size();
  summary.truncated_texts = truncated.size();

  std::map<std::string, EmbeddingVector> by_hash;
  try {
    by_hash = embed_texts(*provider, cache, items, config.provider.batch_size, &summary.stats);
  } catch (const ProviderError& e) {
    std::set<std::string> missing(e.unresolved().begin(), e.unresolved().end());
    std::vector<std::string> ids;
    for (const auto& [id, kinds] : wanted) {
      for (const auto& [kind, hash] : kinds) {
        if (missing.count(hash)) {
          ids.push_back(id);
          break;
        }
      }
    }
    throw ProviderError(e.what(), std::move(ids));
  }

  std::string out;
  for (const auto& [id, kinds] : wanted) {
    std::map<SourceKind, EmbeddingVector> per_source;
    for (const auto& [kind, hash] : kinds)
      per_source[kind] = truncate_normalize(by_hash.at(hash), config.provider.target_dim,
                                            id + "/" + std::string(to_string(kind)));
    EmbeddingVector v = combine_sources(per_source);
    out += json{{"id", id}, {"dim", v.dim()}, {"values", v.values}}.dump() + '\n';
  }
  summary.vectors = wanted.size();
  write_file(config.output_dir / kVectors, out);

  update_run_log(config, "embed",
                 {{"model", provider->model_id()},
                  {"vectors", summary.vectors},
                  {"unique_texts", summary.unique_texts},
                  {"truncated", truncated}});
  return summary;
}

ClusterSummary cluster_stage(const RunConfig& config) {
  require_file(config.output_dir / kVectors, "embed");
  require_file(config.output_dir / kDuplicates, "prepare");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  {
    std::istringstream in(read_file(config.output_dir / kVectors));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      ids.push_back(j.at("id").get<std::string>());
      rows.push_back(j.at("values").get<std::vector<double>>());
    }
  }
  if (ids.empty()) throw Error("no representative vectors to cluster");

  ClusterSummary summary;
  summary.points = ids.size();
  PointSet points = PointSet::FromRows(ids, rows);
  std::vector<int> labels;
  json selection;
  if (ids.size() == 1) {
    labels = {0};
    summary.clusters = 1;
    summary.effective_count = 1;
    selection = {{"epsilon", 0.0},     {"dbcv", 0.0},
                 {"persistence", 1.0}, {"effective_count", 1},
                 {"candidates_considered", 0}};
    summary.persistence = 1.0;
  } else {
    CondensedHierarchy tree = condense(build_mst(points, 1), 2);
    if (config.dump_tree) {
      std::ostringstream s;
      tree.write_debug_jsonl(s);
      write_file(config.output_dir / kTree, s.str());
    }
    SearchResult result = cluster_search(points, tree, config.search);
    const CandidateClustering& best = result.best;
    labels = best.clustering.labels;
    summary.clusters = best.clustering.num_clusters;
    summary.noise = best.clustering.noise_count();
    summary.epsilon = best.clustering.epsilon;
    summary.dbcv = best.dbcv;
    summary.persistence = best.persistence;
    summary.effective_count = best.effective_count;
    summary.candidates_considered = result.candidates.size();
    selection = {{"epsilon", summary.epsilon},
                 {"dbcv", summary.dbcv},
                 {"persistence", summary.persistence},
                 {"effective_count", summary.effective_count},
                 {"candidates_considered", summary.candidates_considered},
                 {"clusters", summary.clusters},
                 {"noise", summary.noise},
                 {"iterations", result.iterations},
                 {"extractions", result.extractions},
                 {"min_dist", result.min_dist},
                 {"max_dist", result.max_dist}};
  }
  selection["points"] = summary.points;
  write_file(config.output_dir / kSelection, selection.dump(2) + "\n");

  std::map<std::string, std::string> rep_cluster = cluster_names(ids, labels);
  std::map<std::string, std::string> assignment;
  for (const auto& [id, rep] : read_duplicates(config.output_dir / kDuplicates)) {
    auto it = rep_cluster.find(rep);
    if (it == rep_cluster.end())
      throw Error("representative " + rep + " has no vector; rerun `embed`");
    assignment[id] = it->second;
  }
  for (const auto& id : unpreparable_ids(config.output_dir)) assignment[id] = "unpreparable-" + id;
  std::string csv = "id,cluster\n";
  for (const auto& [id, cluster] : assignment) csv += csv_field(id) + ',' + csv_field(cluster) + '\n';
  write_file(config.output_dir / kClusters, csv);

  json log = selection;
  log["assigned"] = assignment.size();
  update_run_log(config, "cluster", log);
  return summary;
}

EvalReport evaluate_stage(const RunConfig& config) {
  if (!config.truth) throw Error("evaluate needs a ground-truth CSV (--truth)");
  require_file(config.output_dir / kClusters, "cluster");
  GroundTruth truth = load_ground_truth(*config.truth);
  EvalReport report = evaluate(read_clusters_csv(config.output_dir / kClusters), truth);
  write_file(config.output_dir / kReportJson, to_json(report).dump(2) + "\n");
  write_file(config.output_dir / kReportText, format_report(report));
  update_run_log(config, "evaluate",
                 {{"purity", report.scores.purity},
                  {"inverse_purity", report.scores.inverse_purity},
                  {"f_measure", report.scores.f_measure},
                  {"clusters", report.clusters}});
  return report;
}

}  // namespace

std::string version() { return CRASHDEDUP_VERSION; }

void RunConfig::validate() const {
  if (output_dir.empty()) throw Error("output directory not set");
  sources.validate();
  provider.validate();
  search.validate();
}

fs::path RunConfig::resolved_cache_path() const {
  if (cache_path) return *cache_path;
  if (const char* env = std::getenv("DEDUP_CACHE"); env && *env) return fs::path(env);
  return output_dir / "embedding_cache.jsonl";
}

namespace {

json settings_json(const RunConfig& c) {
  json sources = json::array();
  for (SourceKind k : c.sources.enabled) sources.push_back(std::string(to_string(k)));
  json search = {{"num_steps", c.search.num_steps}};
  search["min_dist"] = c.search.min_dist ? json(*c.search.min_dist) : json(nullptr);
  search["max_dist"] = c.search.max_dist ? json(*c.search.max_dist) : json(nullptr);
  return {{"version", version()},
          {"sources", {{"enabled", sources}, {"asan_keep_traces", c.sources.asan_keep_traces}}},
          {"provider",
           {{"kind", c.provider.kind == ProviderKind::kOffline ? "offline" : "remote"},
            {"model_id", c.provider.model_id()},
            {"endpoint", c.provider.endpoint},
            {"api_key_env", c.provider.api_key_env},
            {"batch_size", c.provider.batch_size},
            {"target_dim", c.provider.target_dim},
            {"seed", c.provider.seed},
            {"offline_dim", c.provider.offline_dim}}},
          {"search", search},
          {"layout",
           {{"trace_extension", c.layout.trace_extension},
            {"asan_extension", c.layout.asan_extension}}}};
}

}  // namespace

json to_json(const RunConfig& c) {
  json j = settings_json(c);
  j["corpus"] = c.corpus.string();
  j["output_dir"] = c.output_dir.string();
  j["truth"] = c.truth ? json(c.truth->string()) : json(nullptr);
  j["cache_path"] = c.resolved_cache_path().string();
  j["dump_tree"] = c.dump_tree;
  return j;
}

std::string config_hash(const RunConfig& c) { return sha256_hex(settings_json(c).dump()); }

std::string cap_text(const std::string& text, std::size_t limit, bool* truncated) {
  if (truncated) *truncated = text.size() > limit;
  if (text.size() <= limit) return text;
  std::size_t cut = text.rfind('\n', limit);
  if (cut != std::string::npos && cut > 0) return text.substr(0, cut);
  // No line break: cut before any UTF-8 continuation bytes.
  cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut);
}

std::map<std::string, std::string> read_clusters_csv(const fs::path& path) {
  auto rows = read_csv(path);
  if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "id" || rows[0][1] != "cluster")
    throw Error(path.string() + ": expected header `id,cluster`");
  std::map<std::string, std::string> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw Error(path.string() + ": malformed row " + std::to_string(i + 1));
    if (!out.emplace(rows[i][0], rows[i][1]).second)
      throw Error(path.string() + ": duplicate id " + rows[i][0]);
  }
  return out;
}

OutputLock::OutputLock(const fs::path& output_dir) : path_(output_dir / kLockFile) {
  fs::create_directories(output_dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw Error(output_dir.string() + " is in use by another run (remove " + path_.string() +
                  " if that run died)");
    throw Error("cannot create " + path_.string() + ": " + std::strerror(errno));
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

PrepareSummary cmd_prepare(const RunConfig& config) {
  begin_stage(config);
  OutputLock lock(config.output_dir);
  return prepare_stage(config);
}

EmbedSummary cmd_embed(const RunConfig& config) {
  begin_stage(config);
  OutputLock lock(config.output_dir);
  return embed_stage(config);
}

ClusterSummary cmd_cluster(const RunConfig& config) {
  begin_stage(config);
  OutputLock lock(config.output_dir);
  return cluster_stage(config);
}

EvalReport cmd_evaluate(const RunConfig& config) {
  begin_stage(config);
  OutputLock lock(config.output_dir);
  return evaluate_stage(config);
}

RunSummary cmd_run(const RunConfig& config) {
  begin_stage(config);
  OutputLock lock(config.output_dir);
  RunSummary s;
  s.prepare = prepare_stage(config);
  s.embed = embed_stage(config);
  s.cluster = cluster_stage(config);
  if (config.truth) s.evaluation = evaluate_stage(config);
  return s;
}

}  // namespace crashdedup
