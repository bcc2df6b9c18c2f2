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

#include "crashdedup/trace_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <utility>

#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
         c == '\f';
}

std::string_view trim_left(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

std::string_view trim(std::string_view s) {
  s = trim_left(s);
  std::size_t end = s.size();
  while (end > 0 && is_space(s[end - 1])) --end;
  return s.substr(0, end);
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

bool is_hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)); }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Lines without their terminators ("\n" or "\r\n").
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return lines;
}

// Lines including their terminators; concatenation reproduces `text`.
std::vector<std::string> split_lines_keep(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    std::size_t end = nl == std::string_view::npos ? text.size() : nl + 1;
    lines.emplace_back(text.substr(start, end - start));
    start = end;
  }
  return lines;
}

bool starts_frame(std::string_view line) {
  line = trim_left(line);
  return line.size() >= 2 && line[0] == '#' && is_digit(line[1]);
}

// True when what follows a closing ')' may end a frame: nothing, or a
// location clause.
bool valid_frame_tail(std::string_view tail, std::optional<std::string>* loc,
                      LocationKind* kind) {
  if (!tail.empty() && !is_space(tail.front())) return false;
  tail = trim(tail);
  if (tail.empty()) {
    *loc = std::nullopt;
    return true;
  }
  auto clause = [&](std::string_view keyword, LocationKind k) {
    if (tail.size() <= keyword.size() || tail.substr(0, keyword.size()) != keyword ||
        !is_space(tail[keyword.size()]))
      return false;
    std::string_view rest = trim(tail.substr(keyword.size()));
    if (rest.empty()) return false;
    *loc = std::string(rest);
    *kind = k;
    return true;
  };
  return clause("at", LocationKind::kSource) ||
         clause("from", LocationKind::kObject);
}

}  // namespace

StackFrame StackFrame::Raw(std::string text) {
  StackFrame frame;
  frame.structured = false;
  frame.raw = std::move(text);
  return frame;
}

std::optional<StackFrame> parse_frame_line(std::string_view line) {
  std::string_view s = trim(line);
  if (s.size() < 2 || s[0] != '#' || !is_digit(s[1])) return std::nullopt;

  StackFrame frame;
  std::size_t i = 1;
  std::size_t index = 0;
  while (i < s.size() && is_digit(s[i])) {
    index = index * 10 + static_cast<std::size_t>(s[i] - '0');
    ++i;
  }
  if (i >= s.size() || !is_space(s[i])) return std::nullopt;
  frame.index = index;
  std::string_view rest = trim_left(s.substr(i));

  if (rest.size() > 2 && rest[0] == '0' && (rest[1] == 'x' || rest[1] == 'X')) {
    std::size_t j = 2;
    while (j < rest.size() && is_hex(rest[j])) ++j;
    if (j == 2) return std::nullopt;
    std::string_view after = trim_left(rest.substr(j));
    if (after.size() < 3 || after.substr(0, 2) != "in" || !is_space(after[2]))
      return std::nullopt;
    frame.address = std::string(rest.substr(0, j));
    rest = trim_left(after.substr(2));
  }

  // Rightmost ')' whose tail is a valid frame ending closes the arguments.
  for (std::size_t close = rest.rfind(')'); close != std::string_view::npos;
       close = close == 0 ? std::string_view::npos : rest.rfind(')', close - 1)) {
    std::optional<std::string> loc;
    LocationKind kind = LocationKind::kSource;
    if (!valid_frame_tail(rest.substr(close + 1), &loc, &kind)) continue;

    int depth = 0;
    std::size_t open = std::string_view::npos;
    for (std::size_t k = close + 1; k-- > 0;) {
      if (rest[k] == ')') {
        ++depth;
      } else if (rest[k] == '(') {
        if (--depth == 0) {
          open = k;
          break;
        }
      }
    }
    if (open == std::string_view::npos) return std::nullopt;
    std::string_view function = trim(rest.substr(0, open));
    if (function.empty()) return std::nullopt;
    frame.function = std::string(function);
    frame.arguments = std::string(trim(rest.substr(open + 1, close - open - 1)));
    frame.location = std::move(loc);
    frame.location_kind = kind;
    frame.raw = std::string(line);
    return frame;
  }
  return std::nullopt;
}

StackTrace parse_trace(std::string_view text) {
  StackTrace trace;
  std::vector<std::string> raw_lines;
  std::string logical;

  auto flush = [&] {
    if (raw_lines.empty()) return;
    std::string raw;
    for (std::size_t k = 0; k < raw_lines.size(); ++k) {
      if (k) raw += '\n';
      raw += raw_lines[k];
    }
    std::optional<StackFrame> frame;
    if (starts_frame(raw_lines.front())) frame = parse_frame_line(logical);
    if (frame) {
      frame->raw = std::move(raw);
      trace.frames.push_back(std::move(*frame));
    } else {
      trace.frames.push_back(StackFrame::Raw(std::move(raw)));
    }
    raw_lines.clear();
    logical.clear();
  };

  for (std::string_view line : split_lines(text)) {
    if (is_blank(line)) continue;
    if (starts_frame(line) || raw_lines.empty()) {
      flush();
      raw_lines.emplace_back(line);
      logical = std::string(trim(line));
    } else {
      raw_lines.emplace_back(line);
      logical += ' ';
      logical += trim(line);
    }
  }
  flush();
  return trace;
}

std::string_view to_string(AsanSectionKind kind) {
  switch (kind) {
    case AsanSectionKind::kHeader: return "header";
    case AsanSectionKind::kErrorLine: return "error_line";
    case AsanSectionKind::kTraceBlock: return "trace_block";
    case AsanSectionKind::kMemoryInfo: return "memory_info";
    case AsanSectionKind::kShadowMap: return "shadow_map";
    case AsanSectionKind::kShadowLegend: return "shadow_legend";
    case AsanSectionKind::kOther: return "other";
  }
  return "other";
}

std::string AsanSection::text() const {
  std::string out;
  for (const auto& line : lines) out += line;
  return out;
}

std::string AsanReport::text() const {
  std::string out;
  for (const auto& section : sections) out += section.text();
  return out;
}

AsanReport parse_asan(std::string_view text) {
  static constexpr std::string_view kMemoryInfoMarkers[] = {
      "is located",         "allocated by thread",
      "freed by thread",    "READ of size",
      "WRITE of size",      "is a wild pointer",
      "located in stack of thread", "This frame has",
  };
  auto contains = [](std::string_view line, std::string_view needle) {
    return line.find(needle) != std::string_view::npos;
  };

  AsanReport report;
  auto append = [&](AsanSectionKind kind, std::string line, bool merge) {
    if (merge && !report.sections.empty() &&
        report.sections.back().kind == kind) {
      report.sections.back().lines.push_back(std::move(line));
    } else {
      report.sections.push_back(AsanSection{kind, {std::move(line)}});
    }
  };

  enum class Mode { kNormal, kShadowMap, kLegend } mode = Mode::kNormal;
  bool seen_error = false;
  for (std::string& line : split_lines_keep(text)) {
    std::string_view content = line;
    while (!content.empty() && (content.back() == '\n' || content.back() == '\r'))
      content.remove_suffix(1);

    if (mode == Mode::kShadowMap) {
      if (contains(content, "Shadow byte legend")) {
        mode = Mode::kLegend;
        append(AsanSectionKind::kShadowLegend, std::move(line), false);
      } else {
        append(AsanSectionKind::kShadowMap, std::move(line), true);
      }
      continue;
    }
    if (mode == Mode::kLegend) {
      // The legend body is indented; a blank or flush-left line ends it.
      if (!is_blank(content) && is_space(content.front())) {
        append(AsanSectionKind::kShadowLegend, std::move(line), true);
        continue;
      }
      mode = Mode::kNormal;
    }

    if (contains(content, "Shadow bytes around the buggy address")) {
      mode = Mode::kShadowMap;
      append(AsanSectionKind::kShadowMap, std::move(line), false);
    } else if (contains(content, "Shadow byte legend")) {
      mode = Mode::kLegend;
      append(AsanSectionKind::kShadowLegend, std::move(line), false);
    } else if (contains(content, "ERROR: AddressSanitizer") ||
               contains(content, "SUMMARY: AddressSanitizer")) {
      seen_error = true;
      append(AsanSectionKind::kErrorLine, std::move(line), false);
    } else if (starts_frame(content)) {
      append(AsanSectionKind::kTraceBlock, std::move(line), true);
    } else if (!seen_error) {
      append(AsanSectionKind::kHeader, std::move(line), true);
    } else if (std::any_of(std::begin(kMemoryInfoMarkers),
                           std::end(kMemoryInfoMarkers),
                           [&](std::string_view m) { return contains(content, m); })) {
      append(AsanSectionKind::kMemoryInfo, std::move(line), true);
    } else {
      append(AsanSectionKind::kOther, std::move(line), true);
    }
  }
  return report;
}

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    auto b = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    std::uint32_t min_cp = 0;
    if (b < 0x80) {
      out += static_cast<char>(b);
      ++i;
      continue;
    } else if ((b & 0xE0) == 0xC0) {
      len = 2;
      min_cp = 0x80;
    } else if ((b & 0xF0) == 0xE0) {
      len = 3;
      min_cp = 0x800;
    } else if ((b & 0xF8) == 0xF0) {
      len = 4;
      min_cp = 0x10000;
    }
    bool valid = len != 0 && i + len <= bytes.size();
    std::uint32_t cp = len ? (b & (0xFF >> (len + 1))) : 0;
    for (std::size_t k = 1; valid && k < len; ++k) {
      auto c = static_cast<unsigned char>(bytes[i + k]);
      if ((c & 0xC0) != 0x80) valid = false;
      cp = (cp << 6) | (c & 0x3F);
    }
    if (valid && (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)))
      valid = false;
    if (valid) {
      out.append(bytes.substr(i, len));
      i += len;
    } else {
      out += kReplacement;
      ++i;
    }
  }
  return out;
}

namespace {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw CorpusError("cannot read " + path.string());
  return sanitize_utf8(buffer.str());
}

}  // namespace

std::vector<CrashRecord> load_corpus(const std::filesystem::path& directory,
                                     const CorpusLayout& layout) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(directory, ec))
    throw CorpusError("corpus directory not found: " + directory.string());

  std::map<std::string, fs::path> traces;
  std::map<std::string, fs::path> reports;
  for (auto it = fs::recursive_directory_iterator(directory, ec);
       !ec && it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (!it->is_regular_file()) continue;
    const fs::path& path = it->path();
    std::string ext = path.extension().string();
    std::map<std::string, fs::path>* target = nullptr;
    if (ext == layout.trace_extension) {
      target = &traces;
    } else if (ext == layout.asan_extension) {
      target = &reports;
    } else {
      continue;
    }
    std::string id = path.stem().string();
    auto [pos, inserted] = target->emplace(id, path);
    if (!inserted)
      throw CorpusError("duplicate id '" + id + "': " + pos->second.string() +
                        " and " + path.string());
  }
  if (ec) throw CorpusError("cannot list " + directory.string() + ": " + ec.message());

  for (const auto& [id, path] : reports) {
    if (!traces.count(id))
      throw CorpusError("ASAN report without a trace for id '" + id + "': " +
                        path.string());
  }

  std::vector<CrashRecord> records;
  records.reserve(traces.size());
  for (const auto& [id, path] : traces) {
    CrashRecord record;
    record.id = id;
    record.trace_text = read_text_file(path);
    if (is_blank(record.trace_text))
      throw CorpusError("empty trace for id '" + id + "': " + path.string());
    if (auto r = reports.find(id); r != reports.end())
      record.asan_text = read_text_file(r->second);
    records.push_back(std::move(record));
  }
  return records;
}

}  // namespace crashdedup
