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

#include "crashdedup/preprocess.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>
#include <utility>

#include <nlohmann/json.hpp>

#include "crashdedup/digest.hpp"
#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::size_t skip_spaces(std::string_view s, std::size_t i) {
  while (i < s.size() && is_space(s[i])) ++i;
  return i;
}

// Index of the ')' matching the '(' at `open`, or npos.
std::size_t matching_paren(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '(') {
      ++depth;
    } else if (s[i] == ')' && --depth == 0) {
      return i;
    }
  }
  return std::string_view::npos;
}

// Position just past "#<digits>" and an optional "0x<hex> in" prefix.
std::size_t skip_frame_prefix(std::string_view s) {
  std::size_t i = skip_spaces(s, 0);
  if (i < s.size() && s[i] == '#') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  }
  i = skip_spaces(s, i);
  if (s.substr(i, 2) == "0x") {
    std::size_t j = i + 2;
    while (j < s.size() && std::isxdigit(static_cast<unsigned char>(s[j]))) ++j;
    std::size_t k = skip_spaces(s, j);
    if (s.substr(k, 2) == "in" && k + 2 < s.size() && is_space(s[k + 2]))
      i = skip_spaces(s, k + 2);
  }
  return i;
}

std::string identity_key(const StackFrame& frame) {
  std::string key;
  if (frame.is_raw()) {
    key = "R\x1f";
    std::string_view raw = frame.raw;
    std::size_t i = skip_spaces(raw, 0);
    if (i < raw.size() && raw[i] == '#') {
      ++i;
      while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) ++i;
      i = skip_spaces(raw, i);
    }
    key += raw.substr(i);
    return key;
  }
  key = "F\x1f";
  key += frame.function;
  key += '\x1f';
  key += frame.arguments;
  key += '\x1f';
  if (frame.location) {
    key += frame.location_kind == LocationKind::kObject ? "from " : "at ";
    key += *frame.location;
  }
  return key;
}

std::string strip_raw_arguments(const std::string& raw) {
  std::string_view s = raw;
  std::size_t i = skip_frame_prefix(s);
  while (i < s.size() && !is_space(s[i]) && s[i] != '(') ++i;
  std::size_t open = s.find('(', i);
  if (open == std::string_view::npos) return raw;
  std::size_t close = matching_paren(s, open);
  if (close == std::string_view::npos) return raw;
  std::string out(s.substr(0, open + 1));
  out += s.substr(close);
  return out;
}

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

}  // namespace

std::string_view to_string(SourceKind kind) {
  switch (kind) {
    case SourceKind::kFullTrace: return "full_trace";
    case SourceKind::kCoarseTrace: return "coarse_trace";
    case SourceKind::kAsanReport: return "asan";
  }
  return "full_trace";
}

std::optional<SourceKind> source_kind_from_string(std::string_view name) {
  for (SourceKind kind : kAllSourceKinds)
    if (to_string(kind) == name) return kind;
  return std::nullopt;
}

std::optional<SourceKind> source_kind_from_flag(std::string_view flag) {
  if (flag == "full") return SourceKind::kFullTrace;
  if (flag == "coarse") return SourceKind::kCoarseTrace;
  if (flag == "asan") return SourceKind::kAsanReport;
  return std::nullopt;
}

void SourceConfig::validate() const {
  if (enabled.empty()) throw Error("source configuration enables no data source");
}

StackTrace dedupe_frames(const StackTrace& trace) {
  StackTrace out;
  std::unordered_set<std::string> seen;
  for (const StackFrame& frame : trace.frames) {
    if (seen.insert(identity_key(frame)).second) out.frames.push_back(frame);
  }
  return out;
}

StackTrace strip_arguments(const StackTrace& trace) {
  StackTrace out = trace;
  for (StackFrame& frame : out.frames) {
    if (frame.is_raw()) {
      frame.raw = strip_raw_arguments(frame.raw);
    } else {
      frame.arguments.clear();
    }
  }
  return out;
}

std::string render_trace(const StackTrace& trace) {
  std::string out;
  for (std::size_t k = 0; k < trace.frames.size(); ++k) {
    const StackFrame& frame = trace.frames[k];
    if (k) out += '\n';
    if (frame.is_raw()) {
      out += frame.raw;
      continue;
    }
    out += '#';
    out += std::to_string(frame.index);
    out += ' ';
    out += frame.function;
    out += " (";
    out += frame.arguments;
    out += ')';
    if (frame.location) {
      out += frame.location_kind == LocationKind::kObject ? " from " : " at ";
      out += *frame.location;
    }
  }
  return out;
}

std::string clean_asan(const AsanReport& report, bool keep_traces) {
  std::string out;
  for (const AsanSection& section : report.sections) {
    switch (section.kind) {
      case AsanSectionKind::kShadowMap:
      case AsanSectionKind::kShadowLegend:
        continue;
      case AsanSectionKind::kTraceBlock:
        if (!keep_traces) continue;
        break;
      default:
        break;
    }
    out += section.text();
  }
  return out;
}

PrepareResult prepare(const CrashRecord& record, const SourceConfig& config) {
  config.validate();
  PrepareResult result;
  result.id = record.id;

  PreparedRecord prepared;
  prepared.id = record.id;
  auto enabled = [&](SourceKind k) { return config.enabled.count(k) > 0; };

  if (enabled(SourceKind::kFullTrace) || enabled(SourceKind::kCoarseTrace)) {
    StackTrace deduped = dedupe_frames(parse_trace(record.trace_text));
    if (enabled(SourceKind::kFullTrace))
      prepared.texts[SourceKind::kFullTrace] = render_trace(deduped);
    if (enabled(SourceKind::kCoarseTrace))
      prepared.texts[SourceKind::kCoarseTrace] =
          render_trace(strip_arguments(deduped));
  }
  if (enabled(SourceKind::kAsanReport) && record.asan_text) {
    prepared.texts[SourceKind::kAsanReport] =
        clean_asan(parse_asan(*record.asan_text), config.asan_keep_traces);
  }
  std::erase_if(prepared.texts, [](const auto& kv) { return is_blank(kv.second); });

  if (prepared.texts.empty()) {
    std::string names;
    for (SourceKind k : config.enabled) {
      if (!names.empty()) names += ',';
      names += to_string(k);
    }
    result.reason = "no enabled data source is available (enabled: " + names +
                    (record.asan_text ? ")" : "; record has no ASAN report)");
    return result;
  }
  for (const auto& [kind, text] : prepared.texts)
    prepared.hashes[kind] = sha256_hex(text);
  result.record = std::move(prepared);
  return result;
}

DuplicateCollapse collapse_duplicates(std::vector<PreparedRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  DuplicateCollapse out;
  std::map<std::string, std::string> representative_of_key;
  for (PreparedRecord& record : records) {
    std::string key;
    for (SourceKind kind : kAllSourceKinds) {
      auto h = record.hashes.find(kind);
      key += h == record.hashes.end() ? std::string("-") : h->second;
      key += '|';
    }
    auto [pos, inserted] = representative_of_key.emplace(key, record.id);
    out.assignment[record.id] = pos->second;
    if (inserted) out.representatives.push_back(std::move(record));
  }
  return out;
}

nlohmann::json to_json(const PreparedRecord& record) {
  nlohmann::json j;
  j["id"] = record.id;
  nlohmann::json hashes = nlohmann::json::object();
  for (const auto& [kind, text] : record.texts) j[std::string(to_string(kind))] = text;
  for (const auto& [kind, hash] : record.hashes)
    hashes[std::string(to_string(kind))] = hash;
  j["hashes"] = std::move(hashes);
  return j;
}

PreparedRecord prepared_record_from_json(const nlohmann::json& j) {
  PreparedRecord record;
  record.id = j.at("id").get<std::string>();
  const nlohmann::json& hashes = j.at("hashes");
  for (SourceKind kind : kAllSourceKinds) {
    std::string name(to_string(kind));
    bool has_text = j.contains(name);
    if (has_text != hashes.contains(name))
      throw Error("prepared record '" + record.id + "': text/hash mismatch for " + name);
    if (!has_text) continue;
    record.texts[kind] = j.at(name).get<std::string>();
    record.hashes[kind] = hashes.at(name).get<std::string>();
  }
  if (record.texts.empty())
    throw Error("prepared record '" + record.id + "' has no data source");
  return record;
}

void write_prepared_jsonl(const std::filesystem::path& path,
                          std::span<const PreparedRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const PreparedRecord& record : records) out << to_json(record).dump() << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<PreparedRecord> read_prepared_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::vector<PreparedRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      records.push_back(prepared_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace crashdedup
