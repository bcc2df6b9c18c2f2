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

// Writes a generated crash corpus and its ground-truth CSV.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "crashdedup/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a labelled synthetic crash corpus"};
  crashdedup::SyntheticCorpusOptions opt;
  std::string corpus;
  std::string truth;
  app.add_option("--corpus", corpus, "Output directory for .trace/.asan files")->required();
  app.add_option("--truth", truth, "Output ground-truth CSV")->required();
  app.add_option("--crashes", opt.crashes, "Total crashes")->capture_default_str();
  app.add_option("--families", opt.families, "Bug families (1-6)")->capture_default_str();
  app.add_option("--duplicates", opt.exact_duplicates, "Verbatim copies among the crashes")
      ->capture_default_str();
  app.add_option("--noise-frames", opt.max_noise_frames, "Max extra frames per trace")
      ->capture_default_str();
  app.add_option("--recursion", opt.recursion_probability, "Chance of a recursive frame run")
      ->capture_default_str();
  app.add_option("--seed", opt.seed, "Random seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  try {
    auto crashes = crashdedup::generate_synthetic_corpus(opt);
    crashdedup::write_synthetic_corpus(crashes, corpus, truth);
    std::fprintf(stderr, "wrote %zu crashes to %s\n", crashes.size(), corpus.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
