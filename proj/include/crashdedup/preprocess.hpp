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

// Turns a raw crash record into the cleaned texts that get embedded:
//
//   full trace   recursive frame copies dropped, topmost copy kept
//   coarse trace the same, with every argument list emptied
//   ASAN report  shadow map and legend removed, trace blocks removed unless
//                asked to keep them
//
// Records whose cleaned texts are identical for every enabled source are
// collapsed onto one representative before embedding.

#ifndef CRASHDEDUP_PREPROCESS_HPP_
#define CRASHDEDUP_PREPROCESS_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crashdedup/trace_ingest.hpp"

namespace crashdedup {

enum class SourceKind { kFullTrace, kCoarseTrace, kAsanReport };

inline constexpr std::array<SourceKind, 3> kAllSourceKinds = {
    SourceKind::kFullTrace, SourceKind::kCoarseTrace, SourceKind::kAsanReport};

// Field name used in files: "full_trace", "coarse_trace", "asan".
std::string_view to_string(SourceKind kind);
std::optional<SourceKind> source_kind_from_string(std::string_view name);
// CLI spelling: "full", "coarse", "asan".
std::optional<SourceKind> source_kind_from_flag(std::string_view flag);

struct SourceConfig {
  std::set<SourceKind> enabled{kAllSourceKinds.begin(), kAllSourceKinds.end()};
  bool asan_keep_traces = false;

  void validate() const;  // throws Error when no kind is enabled
};

struct PreparedRecord {
  std::string id;
  std::map<SourceKind, std::string> texts;
  std::map<SourceKind, std::string> hashes;  // SHA-256 hex of texts[k]

  friend bool operator==(const PreparedRecord&, const PreparedRecord&) = default;
};

struct PrepareResult {
  std::string id;
  std::optional<PreparedRecord> record;
  std::string reason;  // set when record is empty

  bool ok() const { return record.has_value(); }
};

StackTrace dedupe_frames(const StackTrace& trace);
StackTrace strip_arguments(const StackTrace& trace);
std::string render_trace(const StackTrace& trace);
std::string clean_asan(const AsanReport& report, bool keep_traces);

PrepareResult prepare(const CrashRecord& record, const SourceConfig& config);

struct DuplicateCollapse {
  std::vector<PreparedRecord> representatives;     // sorted by id
  std::map<std::string, std::string> assignment;   // id -> representative id
};

DuplicateCollapse collapse_duplicates(std::vector<PreparedRecord> records);

nlohmann::json to_json(const PreparedRecord& record);
PreparedRecord prepared_record_from_json(const nlohmann::json& j);

void write_prepared_jsonl(const std::filesystem::path& path,
                          std::span<const PreparedRecord> records);
std::vector<PreparedRecord> read_prepared_jsonl(const std::filesystem::path& path);

}  // namespace crashdedup

#endif  // CRASHDEDUP_PREPROCESS_HPP_
