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

// crashdedup: group fuzzer crashes by root cause.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "crashdedup/errors.hpp"
#include "crashdedup/pipeline.hpp"

namespace {

using crashdedup::RunConfig;

struct Flags {
  std::string corpus;
  std::string out;
  std::string truth;
  std::string cache;
  std::string sources = "full,coarse,asan";
  bool asan_keep_traces = false;
  std::string provider = "offline";
  std::string model;
  std::string endpoint;
  std::string api_key_env = "DEDUP_API_KEY";
  std::uint64_t seed = 0;
  std::size_t dim = 64;
  std::size_t offline_dim = 256;
  std::size_t batch_size = 100;
  double timeout = 120.0;
  std::size_t num_steps = 64;
  double min_dist = -1.0;
  double max_dist = -1.0;
  bool dump_tree = false;
};

void add_common(CLI::App* cmd, Flags& f, bool needs_corpus) {
  auto* corpus = cmd->add_option("--corpus", f.corpus, "Directory of <id>.trace / <id>.asan files");
  if (needs_corpus) corpus->required();
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--truth", f.truth, "Ground-truth CSV: id,label[,bug_type]");
  cmd->add_option("--cache", f.cache, "Embedding cache file (overrides DEDUP_CACHE)");
  cmd->add_option("--sources", f.sources, "Comma-separated subset of full,coarse,asan")
      ->capture_default_str();
  cmd->add_flag("--asan-keep-traces", f.asan_keep_traces, "Keep trace blocks in ASAN reports");
  cmd->add_option("--provider", f.provider, "Embedding provider")
      ->check(CLI::IsMember({"offline", "remote"}))
      ->capture_default_str();
  cmd->add_option("--model", f.model, "Remote model name");
  cmd->add_option("--endpoint", f.endpoint, "Remote base URL; requests go to <endpoint>/embeddings");
  cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Offline embedder seed")->capture_default_str();
  cmd->add_option("--dim", f.dim, "Dimensions kept after truncation")->capture_default_str();
  cmd->add_option("--offline-dim", f.offline_dim, "Offline embedder output size")
      ->capture_default_str();
  cmd->add_option("--batch-size", f.batch_size, "Texts per provider request")
      ->capture_default_str();
  cmd->add_option("--timeout", f.timeout, "Remote request timeout in seconds")
      ->capture_default_str();
  cmd->add_option("--num-steps", f.num_steps, "Epsilon search iterations")->capture_default_str();
  cmd->add_option("--min-dist", f.min_dist, "Lower end of the epsilon range");
  cmd->add_option("--max-dist", f.max_dist, "Upper end of the epsilon range");
  cmd->add_flag("--dump-tree", f.dump_tree, "Write condensed_tree.jsonl");
}

RunConfig to_config(const Flags& f) {
  RunConfig c;
  c.corpus = f.corpus;
  c.output_dir = f.out;
  if (!f.truth.empty()) c.truth = f.truth;
  if (!f.cache.empty()) c.cache_path = f.cache;
  c.sources.enabled.clear();
  std::stringstream list(f.sources);
  std::string item;
  while (std::getline(list, item, ',')) {
    if (item.empty()) continue;
    auto kind = crashdedup::source_kind_from_flag(item);
    if (!kind) throw crashdedup::Error("unknown source '" + item + "' (use full, coarse, asan)");
    c.sources.enabled.insert(*kind);
  }
  c.sources.asan_keep_traces = f.asan_keep_traces;
  c.provider.kind = f.provider == "remote" ? crashdedup::ProviderKind::kRemote
                                           : crashdedup::ProviderKind::kOffline;
  c.provider.model = f.model;
  c.provider.endpoint = f.endpoint;
  c.provider.api_key_env = f.api_key_env;
  c.provider.seed = f.seed;
  c.provider.target_dim = f.dim;
  c.provider.offline_dim = f.offline_dim;
  c.provider.batch_size = f.batch_size;
  c.provider.timeout_seconds = f.timeout;
  c.search.num_steps = f.num_steps;
  if (f.min_dist >= 0) c.search.min_dist = f.min_dist;
  if (f.max_dist >= 0) c.search.max_dist = f.max_dist;
  c.dump_tree = f.dump_tree;
  return c;
}

void print(const crashdedup::PrepareSummary& s) {
  std::fprintf(stderr,
               "prepare: %zu records, %zu prepared, %zu unpreparable, %zu representatives "
               "(%zu duplicate classes)\n",
               s.total, s.prepared, s.unpreparable.size(), s.representatives,
               s.duplicate_classes);
  for (const auto& [id, reason] : s.unpreparable)
    std::fprintf(stderr, "  unpreparable %s: %s\n", id.c_str(), reason.c_str());
}

void print(const crashdedup::EmbedSummary& s) {
  std::fprintf(stderr,
               "embed: %zu vectors from %zu texts (%zu cached, %zu provider calls, %zu truncated)\n",
               s.vectors, s.unique_texts, s.stats.cache_hits, s.stats.provider_calls,
               s.truncated_texts);
}

void print(const crashdedup::ClusterSummary& s) {
  std::fprintf(stderr,
               "cluster: %zu points -> %zu clusters + %zu noise at epsilon %.6g "
               "(dbcv %.4f, persistence %.4f, %zu candidates)\n",
               s.points, s.clusters, s.noise, s.epsilon, s.dbcv, s.persistence,
               s.candidates_considered);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deduplicate fuzzer crashes by clustering embedded stack traces and ASAN reports"};
  app.set_version_flag("--version", crashdedup::version());
  app.require_subcommand(1);
  Flags flags;
  auto* prepare = app.add_subcommand("prepare", "Parse and clean the corpus, collapse exact duplicates");
  auto* embed = app.add_subcommand("embed", "Embed prepared texts into one vector per crash");
  auto* cluster = app.add_subcommand("cluster", "Cluster the vectors and write clusters.csv");
  auto* evaluate = app.add_subcommand("evaluate", "Score clusters.csv against a ground truth");
  auto* run = app.add_subcommand("run", "prepare, embed, cluster and (with --truth) evaluate");
  add_common(prepare, flags, true);
  add_common(embed, flags, false);
  add_common(cluster, flags, false);
  add_common(evaluate, flags, false);
  add_common(run, flags, true);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig config = to_config(flags);
    if (prepare->parsed()) {
      print(crashdedup::cmd_prepare(config));
    } else if (embed->parsed()) {
      print(crashdedup::cmd_embed(config));
    } else if (cluster->parsed()) {
      print(crashdedup::cmd_cluster(config));
    } else if (evaluate->parsed()) {
      std::cout << crashdedup::format_report(crashdedup::cmd_evaluate(config));
    } else if (run->parsed()) {
      auto s = crashdedup::cmd_run(config);
      print(s.prepare);
      print(s.embed);
      print(s.cluster);
      if (s.evaluation) std::cout << crashdedup::format_report(*s.evaluation);
    }
  } catch (const crashdedup::ProviderError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fprintf(stderr, "unresolved ids (%zu):\n", e.unresolved().size());
    for (const auto& id : e.unresolved()) std::fprintf(stderr, "  %s\n", id.c_str());
    return 3;
  } catch (const crashdedup::IdMismatchError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    for (const auto& id : e.only_in_clusters())
      std::fprintf(stderr, "  only in clusters: %s\n", id.c_str());
    for (const auto& id : e.only_in_truth())
      std::fprintf(stderr, "  only in truth: %s\n", id.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
