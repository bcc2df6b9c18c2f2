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

#include <random>

#include <gtest/gtest.h>

#include "crashdedup/errors.hpp"
#include "temp_dir.hpp"

namespace crashdedup {
namespace {

TEST(ParseTrace, FullFrameWithAddressAndSource) {
  StackTrace t = parse_trace("#0  0x0000555555554abc in foo (a=1, b=0x0) at foo.c:42\n");
  ASSERT_EQ(t.frames.size(), 1u);
  const StackFrame& f = t.frames[0];
  EXPECT_TRUE(f.structured);
  EXPECT_EQ(f.index, 0u);
  EXPECT_EQ(f.address, "0x0000555555554abc");
  EXPECT_EQ(f.function, "foo");
  EXPECT_EQ(f.arguments, "a=1, b=0x0");
  EXPECT_EQ(f.location, "foo.c:42");
  EXPECT_EQ(f.location_kind, LocationKind::kSource);
}

TEST(ParseTrace, ObjectLocationWithoutAddress) {
  StackTrace t = parse_trace("#3  bar () from /lib/libz.so");
  ASSERT_EQ(t.frames.size(), 1u);
  const StackFrame& f = t.frames[0];
  EXPECT_EQ(f.index, 3u);
  EXPECT_FALSE(f.address.has_value());
  EXPECT_EQ(f.function, "bar");
  EXPECT_EQ(f.arguments, "");
  EXPECT_EQ(f.location, "/lib/libz.so");
  EXPECT_EQ(f.location_kind, LocationKind::kObject);
}

TEST(ParseTrace, GarbageBecomesRawFrame) {
  StackTrace t = parse_trace("??");
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_TRUE(t.frames[0].is_raw());
  EXPECT_EQ(t.frames[0].raw, "??");
}

TEST(ParseTrace, NestedParenthesesInArguments) {
  StackTrace t = parse_trace("#1 0x1 in ns::f(int) (cb=(void (*)(int)) 0x4005d0, n=2) at a.cc:7");
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_EQ(t.frames[0].function, "ns::f(int)");
  EXPECT_EQ(t.frames[0].arguments, "cb=(void (*)(int)) 0x4005d0, n=2");
  EXPECT_EQ(t.frames[0].location, "a.cc:7");
}

TEST(ParseTrace, FrameWithoutLocation) {
  StackTrace t = parse_trace("#4  0x00007ffff7a05b97 in __libc_start_main ()");
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_EQ(t.frames[0].function, "__libc_start_main");
  EXPECT_FALSE(t.frames[0].location.has_value());
}

TEST(ParseTrace, ContinuationLinesJoinPreviousFrame) {
  StackTrace t = parse_trace("#0  foo (a=1,\n    b=2) at foo.c:1\n#1  main () at m.c:3\n");
  ASSERT_EQ(t.frames.size(), 2u);
  EXPECT_EQ(t.frames[0].arguments, "a=1, b=2");
  EXPECT_EQ(t.frames[0].raw, "#0  foo (a=1,\n    b=2) at foo.c:1");
  EXPECT_EQ(t.frames[1].function, "main");
}

TEST(ParseTrace, UnbalancedParenthesesStayRaw) {
  StackTrace t = parse_trace("#2  weird (a=(1 at x.c:1");
  ASSERT_EQ(t.frames.size(), 1u);
  EXPECT_TRUE(t.frames[0].is_raw());
  EXPECT_EQ(t.frames[0].raw, "#2  weird (a=(1 at x.c:1");
}

TEST(ParseTrace, FrameOrderFollowsInput) {
  StackTrace t = parse_trace("#0 a () at a.c:1\n#1 b () at b.c:2\n#2 c () at c.c:3\n");
  ASSERT_EQ(t.frames.size(), 3u);
  EXPECT_EQ(t.frames[0].function, "a");
  EXPECT_EQ(t.frames[2].function, "c");
}

// Every non-blank input line survives in some frame's raw text, in order.
TEST(ParseTrace, RawTextIsLossless) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {
      "#0  0x1 in f (x=1) at f.c:1", "#1  g () from /lib/x.so", "    y=2)", "garbage ((",
      "#7 ??", "#3  h (a=(b), c=\"(\") at h.c:9", "<signal handler called>"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    std::string expected;
    std::size_t lines = rng() % 8 + 1;
    for (std::size_t i = 0; i < lines; ++i) {
      const std::string& p = pieces[rng() % pieces.size()];
      text += p + "\n";
      expected += p + "\n";
    }
    std::string rebuilt;
    for (const auto& f : parse_trace(text).frames) rebuilt += f.raw + "\n";
    EXPECT_EQ(rebuilt, expected);
  }
}

constexpr const char* kReport =
    "=================================================================\n"
    "==4242==ERROR: AddressSanitizer: heap-buffer-overflow on address 0x602000000011 at pc 0x1\n"
    "READ of size 1 at 0x602000000011 thread T0\n"
    "    #0 0x4f2 in png_read_chunk src/png/chunk.c:214:9\n"
    "    #1 0x4f3 in main fuzz/main.c:3:1\n"
    "\n"
    "0x602000000011 is located 0 bytes to the right of 1-byte region [0x602000000010,0x602000000011)\n"
    "allocated by thread T0 here:\n"
    "    #0 0x4a1 in malloc\n"
    "\n"
    "SUMMARY: AddressSanitizer: heap-buffer-overflow src/png/chunk.c:214:9 in png_read_chunk\n"
    "Shadow bytes around the buggy address:\n"
    "  0x0c047fff7fb0: 00 00 00 00\n"
    "=>0x0c047fff8000: fa fa[01]fa\n"
    "Shadow byte legend (one shadow byte represents 8 application bytes):\n"
    "  Addressable:           00\n"
    "  Heap left redzone:       fa\n"
    "==4242==ABORTING\n";

TEST(ParseAsan, TagsSections) {
  AsanReport r = parse_asan(kReport);
  std::vector<AsanSectionKind> kinds;
  for (const auto& s : r.sections) kinds.push_back(s.kind);
  using K = AsanSectionKind;
  std::vector<K> expected = {K::kHeader,     K::kErrorLine,  K::kMemoryInfo, K::kTraceBlock,
                             K::kOther,      K::kMemoryInfo, K::kTraceBlock, K::kOther,
                             K::kErrorLine,  K::kShadowMap,  K::kShadowLegend, K::kOther};
  EXPECT_EQ(kinds, expected);
  EXPECT_EQ(r.sections[9].lines.size(), 3u);
  EXPECT_EQ(r.sections[10].lines.size(), 3u);
  EXPECT_EQ(r.sections[3].lines.size(), 2u);
}

TEST(ParseAsan, ReconstructsInputExactly) {
  EXPECT_EQ(parse_asan(kReport).text(), kReport);
  EXPECT_EQ(parse_asan("").text(), "");
  EXPECT_EQ(parse_asan("no newline at end").text(), "no newline at end");
  EXPECT_EQ(parse_asan("crlf\r\nlines\r\n").text(), "crlf\r\nlines\r\n");
}

TEST(ParseAsan, RandomLineSoupRoundTrips) {
  std::mt19937_64 rng(5);
  std::vector<std::string> pieces = {
      "==1==ERROR: AddressSanitizer: SEGV\n", "    #0 0x1 in f a.c:1\n", "\n", "\r\n",
      "Shadow bytes around the buggy address:\n", "  0x0: 00 fa\n",
      "Shadow byte legend (one shadow byte represents 8 application bytes):\n",
      "  Freed heap region: fd\n", "anything else", "SUMMARY: AddressSanitizer: SEGV\n",
      "is located 3 bytes\n"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string text;
    for (std::size_t i = rng() % 15; i > 0; --i) text += pieces[rng() % pieces.size()];
    EXPECT_EQ(parse_asan(text).text(), text);
  }
}

TEST(SanitizeUtf8, ReplacesInvalidBytes) {
  EXPECT_EQ(sanitize_utf8("ok"), "ok");
  EXPECT_EQ(sanitize_utf8("a\xff" "b"), "a\xEF\xBF\xBD" "b");
  EXPECT_EQ(sanitize_utf8("\xC3\xA9"), "\xC3\xA9");
  EXPECT_EQ(sanitize_utf8("\xC3"), "\xEF\xBF\xBD");
}

TEST(LoadCorpus, PairsTracesWithOptionalReports) {
  TempDir dir;
  dir.write("a.trace", "#0 f () at f.c:1\n");
  dir.write("a.asan", "==1==ERROR: AddressSanitizer: SEGV\n");
  dir.write("b.trace", "#0 g () at g.c:1\n");
  auto records = load_corpus(dir.path());
  ASSERT_EQ(records.size(), 2u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_TRUE(records[0].asan_text.has_value());
  EXPECT_EQ(records[1].id, "b");
  EXPECT_FALSE(records[1].asan_text.has_value());
}

TEST(LoadCorpus, EmptyDirectoryGivesNoRecords) {
  TempDir dir;
  EXPECT_TRUE(load_corpus(dir.path()).empty());
}

TEST(LoadCorpus, DuplicateStemInNestedFolderIsAnError) {
  TempDir dir;
  dir.write("a.trace", "#0 f ()\n");
  dir.write("nested/a.trace", "#0 f ()\n");
  try {
    load_corpus(dir.path());
    FAIL() << "expected CorpusError";
  } catch (const CorpusError& e) {
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
}

TEST(LoadCorpus, MissingDirectoryIsAnError) {
  EXPECT_THROW(load_corpus("/nonexistent/corpus/dir"), CorpusError);
}

TEST(LoadCorpus, ReportWithoutTraceIsAnError) {
  TempDir dir;
  dir.write("a.asan", "x\n");
  EXPECT_THROW(load_corpus(dir.path()), CorpusError);
}

TEST(LoadCorpus, SortedById) {
  TempDir dir;
  for (const char* id : {"c", "a", "b"}) dir.write(std::string(id) + ".trace", "#0 f ()\n");
  auto records = load_corpus(dir.path());
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_EQ(records[2].id, "c");
}

}  // namespace
}  // namespace crashdedup
