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

#include "crashdedup/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "crashdedup/csv.hpp"
#include "crashdedup/errors.hpp"

namespace crashdedup {
namespace {

struct FrameTemplate {
  std::string function;
  std::string file;
  int line;
  std::vector<std::string> args;
};

struct FamilyTemplate {
  std::string label;
  std::string bug_type;
  std::string asan_kind;
  std::string access;
  std::vector<FrameTemplate> frames;  // crash site first
  std::vector<FrameTemplate> origin;  // allocation / free site
  std::size_t recursive_frame;        // index into frames
};

const std::vector<FamilyTemplate>& families() {
  static const std::vector<FamilyTemplate> kFamilies = {
      {"png-chunk-overflow", "Heap-based Buffer Overflow", "heap-buffer-overflow", "READ",
       {{"png_read_chunk_data", "src/png/chunk.c", 214, {"reader", "chunk", "length"}},
        {"png_decode_scanline", "src/png/decode.c", 88, {"state", "row", "filter"}},
        {"png_inflate_stream", "src/png/inflate.c", 431, {"state", "out", "avail"}},
        {"png_process_image", "src/png/image.c", 57, {"image", "flags"}}},
       {{"png_alloc_chunk", "src/png/chunk.c", 61, {"reader", "size"}}},
       2},
      {"xml-node-use-after-free", "Use After Free", "heap-use-after-free", "WRITE",
       {{"xml_node_set_attribute", "lib/xml/tree.c", 1290, {"node", "name", "value"}},
        {"xml_sax_end_element", "lib/xml/sax.c", 745, {"ctxt", "localname"}},
        {"xml_parse_element_children", "lib/xml/parser.c", 3310, {"ctxt", "depth"}},
        {"xml_parse_document", "lib/xml/parser.c", 5120, {"ctxt"}}},
       {{"xml_free_node_list", "lib/xml/tree.c", 980, {"cur"}},
        {"xml_dict_cleanup", "lib/xml/dict.c", 210, {"dict"}}},
       2},
      {"json-number-stack-overflow", "Stack-based Buffer Overflow", "stack-buffer-overflow",
       "WRITE",
       {{"json_copy_digits", "json/number.c", 47, {"dst", "src", "count"}},
        {"json_parse_number", "json/number.c", 112, {"parser", "token"}},
        {"json_parse_value", "json/value.c", 301, {"parser", "depth"}},
        {"json_parse_array", "json/value.c", 402, {"parser", "depth"}}},
       {},
       3},
      {"tiff-tag-null-deref", "NULL Pointer Dereference", "SEGV", "READ",
       {{"tiff_read_directory_tag", "libtiff/dir.c", 655, {"tif", "tag", "count"}},
        {"tiff_read_directory", "libtiff/dir.c", 520, {"tif"}},
        {"tiff_open_stream", "libtiff/open.c", 140, {"name", "mode", "stream"}}},
       {},
       1},
      {"lzw-global-overflow", "Out-of-bounds Read", "global-buffer-overflow", "READ",
       {{"lzw_lookup_code", "codec/lzw.c", 73, {"table", "code"}},
        {"lzw_decode_block", "codec/lzw.c", 190, {"dec", "in", "n"}},
        {"codec_run", "codec/codec.c", 45, {"codec", "buf", "len"}}},
       {},
       1},
      {"sql-div-by-zero", "Divide By Zero", "FPE", "READ",
       {{"sql_eval_modulo", "db/expr.c", 902, {"lhs", "rhs"}},
        {"sql_eval_binary", "db/expr.c", 860, {"expr", "row"}},
        {"sql_eval_where", "db/select.c", 377, {"stmt", "row"}},
        {"sql_step", "db/vm.c", 1201, {"stmt"}}},
       {},
       1},
  };
  return kFamilies;
}

const std::vector<FrameTemplate>& noise_frames() {
  static const std::vector<FrameTemplate> kNoise = {
      {"buffer_reserve", "src/util/buffer.c", 33, {"buf", "n"}},
      {"stream_read_bytes", "src/util/stream.c", 120, {"stream", "dst", "len"}},
      {"checked_realloc", "src/util/alloc.c", 18, {"ptr", "size"}},
      {"utf8_decode_char", "src/util/utf8.c", 64, {"s", "end"}},
      {"hash_table_lookup", "src/util/hash.c", 141, {"table", "key"}},
      {"io_fill_window", "src/util/io.c", 77, {"io", "want"}},
  };
  return kNoise;
}

const std::vector<FrameTemplate>& harness_frames() {
  static const std::vector<FrameTemplate> kHarness = {
      {"LLVMFuzzerTestOneInput", "fuzz/fuzzer.c", 31, {"data", "size"}},
      {"main", "fuzz/standalone_main.c", 54, {"argc", "argv"}},
  };
  return kHarness;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
  std::string hex(std::uint64_t base, std::uint64_t span) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%012llx",
                  static_cast<unsigned long long>(base + uniform(0, span)));
    return buf;
  }
  std::string arg_value() {
    switch (uniform(0, 2)) {
      case 0: return hex(0x602000000000ULL, 0xfffff);
      case 1: return std::to_string(uniform(0, 4096));
      default: return hex(0x7ffc00000000ULL, 0xffffffff);
    }
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct Frame {
  const FrameTemplate* tmpl;
  std::string args;
  std::string pc;
};

std::string render_args(Gen& g, const FrameTemplate& t) {
  std::string out;
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) out += ", ";
    out += t.args[i] + "=" + g.arg_value();
  }
  return out;
}

std::string gdb_frame(std::size_t index, const Frame& f) {
  std::ostringstream s;
  s << '#' << index << (index < 10 ? "  " : " ") << f.pc << " in " << f.tmpl->function << " ("
    << f.args << ") at " << f.tmpl->file << ':' << f.tmpl->line << '\n';
  return s.str();
}

std::string asan_frame(std::size_t index, const Frame& f) {
  std::ostringstream s;
  s << "    #" << index << ' ' << f.pc << " in " << f.tmpl->function << ' ' << f.tmpl->file
    << ':' << f.tmpl->line << ':' << (f.tmpl->line % 17 + 3) << '\n';
  return s.str();
}

std::string shadow_block(Gen& g) {
  static const char* kBytes[] = {"00", "fa", "fd", "f1", "f2", "f3", "04"};
  std::ostringstream s;
  s << "Shadow bytes around the buggy address:\n";
  std::uint64_t base = 0x0c047fff8000ULL + g.uniform(0, 0xfff) * 16;
  for (int row = -2; row <= 2; ++row) {
    char addr[32];
    std::snprintf(addr, sizeof(addr), "0x%012llx",
                  static_cast<unsigned long long>(base + static_cast<std::uint64_t>(row + 2) * 16));
    s << (row == 0 ? "=>" : "  ") << addr << ':';
    for (int b = 0; b < 16; ++b) {
      const char* v = kBytes[g.uniform(0, 6)];
      if (row == 0 && b == 5) {
        s << '[' << v << ']';
      } else {
        s << (row == 0 && b == 6 ? "" : " ") << v;
      }
    }
    s << '\n';
  }
  s << "Shadow byte legend (one shadow byte represents 8 application bytes):\n"
       "  Addressable:           00\n"
       "  Partially addressable: 01 02 03 04 05 06 07 \n"
       "  Heap left redzone:       fa\n"
       "  Freed heap region:       fd\n"
       "  Stack left redzone:      f1\n"
       "  Stack mid redzone:       f2\n"
       "  Stack right redzone:     f3\n"
       "  Global redzone:          f9\n"
       "  ASan internal:           fe\n";
  return s.str();
}

CrashRecord make_crash(Gen& g, const FamilyTemplate& fam, const SyntheticCorpusOptions& opt,
                       const std::string& id) {
  std::vector<Frame> frames;
  auto frame_of = [&](const FrameTemplate& t) {
    return Frame{&t, render_args(g, t), g.hex(0x555555554000ULL, 0xfffff)};
  };
  for (const auto& t : fam.frames) frames.push_back(frame_of(t));

  std::size_t extra = static_cast<std::size_t>(g.uniform(0, opt.max_noise_frames));
  for (std::size_t k = 0; k < extra; ++k) {
    const auto& pool = noise_frames();
    const FrameTemplate& t = pool[g.uniform(0, pool.size() - 1)];
    auto pos = static_cast<std::ptrdiff_t>(g.uniform(1, frames.size()));
    frames.insert(frames.begin() + pos, frame_of(t));
  }
  if (g.chance(opt.recursion_probability)) {
    std::size_t at = std::min(fam.recursive_frame, frames.size() - 1);
    Frame copy = frames[at];
    std::size_t copies = static_cast<std::size_t>(g.uniform(20, 400));
    frames.insert(frames.begin() + static_cast<std::ptrdiff_t>(at), copies, copy);
  }
  for (const auto& t : harness_frames()) frames.push_back(frame_of(t));

  std::string trace;
  for (std::size_t i = 0; i < frames.size(); ++i) trace += gdb_frame(i, frames[i]);
  trace += "#" + std::to_string(frames.size()) +
           "  0x00007ffff7829d90 in __libc_start_call_main () from "
           "/lib/x86_64-linux-gnu/libc.so.6\n";

  const std::string pid = std::to_string(g.uniform(1000, 99999));
  const std::string addr = g.hex(0x602000000000ULL, 0xfffff);
  std::ostringstream asan;
  asan << "=================================================================\n";
  asan << "==" << pid << "==ERROR: AddressSanitizer: " << fam.asan_kind << " on address "
       << addr << " at pc " << frames[0].pc << " bp " << g.hex(0x7ffc00000000ULL, 0xffffffff)
       << " sp " << g.hex(0x7ffc00000000ULL, 0xffffffff) << '\n';
  asan << fam.access << " of size " << (1u << g.uniform(0, 3)) << " at " << addr
       << " thread T0\n";
  for (std::size_t i = 0; i < frames.size() && i < 40; ++i) asan << asan_frame(i, frames[i]);
  asan << '\n';
  if (fam.asan_kind == "heap-buffer-overflow" || fam.asan_kind == "heap-use-after-free") {
    std::size_t region = static_cast<std::size_t>(g.uniform(8, 512));
    if (fam.asan_kind == "heap-buffer-overflow") {
      asan << addr << " is located " << g.uniform(0, 7) << " bytes to the right of " << region
           << "-byte region [" << g.hex(0x602000000000ULL, 0xfffff) << ','
           << g.hex(0x602000000000ULL, 0xfffff) << ")\n";
      asan << "allocated by thread T0 here:\n";
    } else {
      asan << addr << " is located " << g.uniform(0, region - 1) << " bytes inside of "
           << region << "-byte region [" << g.hex(0x602000000000ULL, 0xfffff) << ','
           << g.hex(0x602000000000ULL, 0xfffff) << ")\n";
      asan << "freed by thread T0 here:\n";
    }
    std::size_t idx = 0;
    asan << "    #" << idx++ << ' ' << g.hex(0x4a0000ULL, 0xffff)
         << (fam.asan_kind == "heap-use-after-free" ? " in free\n" : " in malloc\n");
    for (const auto& t : fam.origin) asan << asan_frame(idx++, frame_of(t));
    asan << '\n';
  } else if (fam.asan_kind == "stack-buffer-overflow") {
    asan << "Address " << addr << " is located in stack of thread T0 at offset "
         << g.uniform(32, 96) << " in frame\n";
    asan << asan_frame(0, frames[1]);
    asan << "\n  This frame has 1 object(s):\n";
    asan << "    [32, 64) 'digits' (line 108) <== Memory access at offset 64 overflows this "
            "variable\n\n";
  } else if (fam.asan_kind == "SEGV") {
    asan << "The signal is caused by a READ memory access.\n";
    asan << "Hint: address points to the zero page.\n\n";
  }
  asan << "SUMMARY: AddressSanitizer: " << fam.asan_kind << ' ' << fam.frames[0].file << ':'
       << fam.frames[0].line << ':' << (fam.frames[0].line % 17 + 3) << " in "
       << fam.frames[0].function << '\n';
  if (fam.asan_kind != "SEGV" && fam.asan_kind != "FPE") asan << shadow_block(g);
  asan << "==" << pid << "==ABORTING\n";

  return CrashRecord{id, trace, asan.str()};
}

}  // namespace

std::vector<SyntheticCrash> generate_synthetic_corpus(const SyntheticCorpusOptions& options) {
  if (options.families == 0 || options.families > families().size())
    throw Error("synthetic corpus supports 1.." + std::to_string(families().size()) +
                " families");
  if (options.exact_duplicates >= options.crashes)
    throw Error("more duplicates than crashes requested");
  Gen g(options.seed);
  const std::size_t unique = options.crashes - options.exact_duplicates;

  // Ids are assigned after shuffling so they carry no family information.
  std::vector<SyntheticCrash> crashes;
  for (std::size_t i = 0; i < unique; ++i) {
    const FamilyTemplate& fam = families()[i % options.families];
    SyntheticCrash c;
    c.record = make_crash(g, fam, options, "");
    c.family = fam.label;
    c.bug_type = fam.bug_type;
    crashes.push_back(std::move(c));
  }
  std::vector<std::size_t> sources;
  for (std::size_t k = 0; k < options.exact_duplicates; ++k)
    sources.push_back(static_cast<std::size_t>(g.uniform(0, unique - 1)));
  for (std::size_t src : sources) {
    SyntheticCrash copy = crashes[src];
    copy.duplicate_of = std::to_string(src);  // provisional, fixed below
    crashes.push_back(std::move(copy));
  }

  std::vector<std::size_t> order(crashes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), g.rng());
  std::vector<std::string> ids(crashes.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "crash-%04zu", pos + 1);
    ids[order[pos]] = buf;
  }
  for (std::size_t i = 0; i < crashes.size(); ++i) {
    crashes[i].record.id = ids[i];
    if (crashes[i].duplicate_of)
      crashes[i].duplicate_of = ids[std::stoul(*crashes[i].duplicate_of)];
  }
  std::sort(crashes.begin(), crashes.end(),
            [](const auto& a, const auto& b) { return a.record.id < b.record.id; });
  return crashes;
}

void write_synthetic_corpus(const std::vector<SyntheticCrash>& crashes,
                            const std::filesystem::path& corpus_dir,
                            const std::filesystem::path& truth_csv) {
  std::filesystem::create_directories(corpus_dir);
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("cannot write " + path.string());
  };
  std::string truth = "id,label,bug_type\n";
  for (const SyntheticCrash& c : crashes) {
    write(corpus_dir / (c.record.id + ".trace"), c.record.trace_text);
    if (c.record.asan_text) write(corpus_dir / (c.record.id + ".asan"), *c.record.asan_text);
    truth += csv_field(c.record.id) + ',' + csv_field(c.family) + ',' + csv_field(c.bug_type) + '\n';
  }
  if (truth_csv.has_parent_path()) std::filesystem::create_directories(truth_csv.parent_path());
  write(truth_csv, truth);
}

}  // namespace crashdedup
