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

// Loading crash corpora and parsing the two raw text formats we consume:
// GDB-style backtraces and AddressSanitizer reports.
//
// Backtrace grammar, one frame per logical line:
//
//   #<digits> [0x<hex> in ]<function> (<arguments>)[ at <file>:<line> | from <object>]
//
// The argument list is a balanced-parenthesis span and may be empty. Lines
// that do not start with '#' continue the previous frame (GDB wraps long
// argument lists). Anything that does not fit the grammar is kept verbatim
// as a raw frame; parsing never fails.

#ifndef CRASHDEDUP_TRACE_INGEST_HPP_
#define CRASHDEDUP_TRACE_INGEST_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crashdedup {

struct CrashRecord {
  std::string id;
  std::string trace_text;
  std::optional<std::string> asan_text;

  friend bool operator==(const CrashRecord&, const CrashRecord&) = default;
};

enum class LocationKind { kSource, kObject };

struct StackFrame {
  std::size_t index = 0;
  std::optional<std::string> address;
  std::string function;
  std::string arguments;
  std::optional<std::string> location;
  LocationKind location_kind = LocationKind::kSource;
  // Source text of the frame: the '#' line plus any continuation lines,
  // joined with '\n', without a trailing newline.
  std::string raw;
  bool structured = true;

  bool is_raw() const { return !structured; }
  static StackFrame Raw(std::string text);

  friend bool operator==(const StackFrame&, const StackFrame&) = default;
};

struct StackTrace {
  std::vector<StackFrame> frames;  // innermost first, input order

  friend bool operator==(const StackTrace&, const StackTrace&) = default;
};

enum class AsanSectionKind {
  kHeader,
  kErrorLine,
  kTraceBlock,
  kMemoryInfo,
  kShadowMap,
  kShadowLegend,
  kOther,
};

std::string_view to_string(AsanSectionKind kind);

struct AsanSection {
  AsanSectionKind kind = AsanSectionKind::kOther;
  std::vector<std::string> lines;  // each keeps its line terminator

  std::string text() const;
};

struct AsanReport {
  std::vector<AsanSection> sections;

  // Concatenation of every section; equals the parsed input byte-for-byte.
  std::string text() const;
};

struct CorpusLayout {
  std::string trace_extension = ".trace";
  std::string asan_extension = ".asan";
};

// Walks `directory` recursively and returns one record per file stem, sorted
// by id. Throws CorpusError on a missing directory, unreadable or empty trace,
// an ASAN report without a trace, or a stem that appears twice.
std::vector<CrashRecord> load_corpus(const std::filesystem::path& directory,
                                     const CorpusLayout& layout = {});

StackTrace parse_trace(std::string_view text);

// Parses one logical frame line. Returns nullopt when the line does not match
// the grammar.
std::optional<StackFrame> parse_frame_line(std::string_view line);

AsanReport parse_asan(std::string_view text);

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

}  // namespace crashdedup

#endif  // CRASHDEDUP_TRACE_INGEST_HPP_
