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

// Generated crash corpora with known ground truth: templated bug families
// with randomized argument values, extra frames, recursion and ASAN details,
// plus verbatim copies of some crashes.

#ifndef CRASHDEDUP_SYNTHETIC_HPP_
#define CRASHDEDUP_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crashdedup/trace_ingest.hpp"

namespace crashdedup {

struct SyntheticCorpusOptions {
  std::size_t crashes = 300;          // including the exact duplicates
  std::size_t families = 3;           // at most 6
  std::size_t exact_duplicates = 20;
  std::size_t max_noise_frames = 2;   // extra frames inserted per trace
  double recursion_probability = 0.1; // chance of a deep recursive frame run
  std::uint64_t seed = 1;
};

struct SyntheticCrash {
  CrashRecord record;
  std::string family;
  std::string bug_type;
  std::optional<std::string> duplicate_of;
};

std::vector<SyntheticCrash> generate_synthetic_corpus(const SyntheticCorpusOptions& options);

// Writes <id>.trace and <id>.asan into `corpus_dir` and `id,label,bug_type`
// rows into `truth_csv`.
void write_synthetic_corpus(const std::vector<SyntheticCrash>& crashes,
                            const std::filesystem::path& corpus_dir,
                            const std::filesystem::path& truth_csv);

}  // namespace crashdedup

#endif  // CRASHDEDUP_SYNTHETIC_HPP_
