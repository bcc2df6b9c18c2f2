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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "crashdedup/embedding.hpp"
#include "crashdedup/errors.hpp"
#include "crashdedup/hdbscan.hpp"
#include "crashdedup/metrics.hpp"
#include "crashdedup/pipeline.hpp"
#include "crashdedup/preprocess.hpp"
#include "crashdedup/search.hpp"
#include "crashdedup/trace_ingest.hpp"

namespace py = pybind11;
namespace cd = crashdedup;

namespace {

std::map<std::string, std::string> texts_by_name(const std::map<cd::SourceKind, std::string>& m) {
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : m) out[std::string(cd::to_string(k))] = v;
  return out;
}

cd::SourceConfig source_config(const std::vector<std::string>& sources, bool keep_traces) {
  cd::SourceConfig c;
  c.enabled.clear();
  for (const auto& s : sources) {
    auto kind = cd::source_kind_from_flag(s);
    if (!kind) throw cd::Error("unknown source '" + s + "'");
    c.enabled.insert(*kind);
  }
  c.asan_keep_traces = keep_traces;
  return c;
}

py::dict frame_dict(const cd::StackFrame& f) {
  py::dict d;
  d["index"] = f.index;
  d["address"] = f.address ? py::cast(*f.address) : py::none();
  d["function"] = f.function;
  d["arguments"] = f.arguments;
  d["location"] = f.location ? py::cast(*f.location) : py::none();
  d["raw"] = f.raw;
  d["structured"] = f.structured;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Crash deduplication core";
  m.attr("__version__") = cd::version();

  static auto error = py::register_exception<cd::Error>(m, "Error");
  py::register_exception<cd::DegenerateVectorError>(m, "DegenerateVectorError", error.ptr());
  py::register_exception<cd::CorpusError>(m, "CorpusError", error.ptr());
  py::register_exception<cd::IdMismatchError>(m, "IdMismatchError", error.ptr());
  py::register_exception<cd::ProviderError>(m, "ProviderError", error.ptr());
  py::register_exception<cd::ProtocolError>(m, "ProtocolError", error.ptr());

  m.def(
      "parse_trace",
      [](const std::string& text) {
        py::list out;
        for (const auto& f : cd::parse_trace(text).frames) out.append(frame_dict(f));
        return out;
      },
      py::arg("text"), "Parse a GDB backtrace into a list of frame dicts.");

  m.def(
      "prepare",
      [](const std::string& id, const std::string& trace, std::optional<std::string> asan,
         const std::vector<std::string>& sources, bool keep_traces) -> py::object {
        cd::PrepareResult r = cd::prepare(cd::CrashRecord{id, trace, std::move(asan)},
                                          source_config(sources, keep_traces));
        if (!r.ok()) return py::none();
        return py::cast(texts_by_name(r.record->texts));
      },
      py::arg("id"), py::arg("trace"), py::arg("asan") = py::none(),
      py::arg("sources") = std::vector<std::string>{"full", "coarse", "asan"},
      py::arg("asan_keep_traces") = false,
      "Cleaned texts per source, or None when no enabled source is available.");

  m.def(
      "offline_embed",
      [](const std::string& text, std::size_t dim, std::uint64_t seed) {
        return cd::offline_embed(text, dim, seed).values;
      },
      py::arg("text"), py::arg("dim") = 256, py::arg("seed") = 0);

  m.def(
      "combine_sources",
      [](const std::map<std::string, std::vector<double>>& per_source) {
        std::map<cd::SourceKind, cd::EmbeddingVector> in;
        for (const auto& [name, v] : per_source) {
          auto kind = cd::source_kind_from_string(name);
          if (!kind) kind = cd::source_kind_from_flag(name);
          if (!kind) throw cd::Error("unknown source '" + name + "'");
          in[*kind] = cd::EmbeddingVector{v, false};
        }
        return cd::combine_sources(in).values;
      },
      py::arg("per_source"));

  m.def(
      "cluster",
      [](const std::vector<std::vector<double>>& rows, std::size_t num_steps) {
        cd::SearchParams params;
        params.num_steps = num_steps;
        cd::PointSet points = cd::PointSet::FromRows(rows);
        py::dict d;
        if (rows.size() == 1) {
          d["labels"] = std::vector<int>{0};
          d["epsilon"] = 0.0;
          d["dbcv"] = 0.0;
          d["persistence"] = 1.0;
          d["effective_count"] = 1;
          d["candidates"] = 0;
          return d;
        }
        cd::SearchResult r;
        {
          py::gil_scoped_release release;
          r = cd::cluster_points(points, params);
        }
        d["labels"] = r.best.clustering.labels;
        d["epsilon"] = r.best.clustering.epsilon;
        d["dbcv"] = r.best.dbcv;
        d["persistence"] = r.best.persistence;
        d["effective_count"] = r.best.effective_count;
        d["candidates"] = r.candidates.size();
        return d;
      },
      py::arg("vectors"), py::arg("num_steps") = 64,
      "Cluster unit vectors; noise points are labelled -1.");

  m.def(
      "dbcv",
      [](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
        return cd::dbcv(cd::PointSet::FromRows(rows, false), labels);
      },
      py::arg("points"), py::arg("labels"));

  m.def(
      "evaluate",
      [](const std::map<std::string, std::string>& clusters,
         const std::map<std::string, std::string>& labels,
         const std::map<std::string, std::string>& bug_types) {
        cd::GroundTruth truth{labels, bug_types};
        cd::EvalReport report = cd::evaluate(clusters, truth);
        return py::module_::import("json").attr("loads")(cd::to_json(report).dump());
      },
      py::arg("clusters"), py::arg("labels"),
      py::arg("bug_types") = std::map<std::string, std::string>{},
      "Purity, inverse purity, F-measure and per-label counts as a dict.");

  m.def(
      "run",
      [](const std::filesystem::path& corpus, const std::filesystem::path& out,
         std::optional<std::filesystem::path> truth, const std::vector<std::string>& sources,
         std::size_t dim, std::uint64_t seed, std::size_t num_steps,
         std::optional<std::filesystem::path> cache) {
        cd::RunConfig c;
        c.corpus = corpus;
        c.output_dir = out;
        c.truth = std::move(truth);
        c.cache_path = std::move(cache);
        c.sources = source_config(sources, false);
        c.provider.target_dim = dim;
        c.provider.seed = seed;
        c.search.num_steps = num_steps;
        cd::RunSummary s;
        {
          py::gil_scoped_release release;
          s = cd::cmd_run(c);
        }
        py::dict d;
        d["records"] = s.prepare.total;
        d["representatives"] = s.prepare.representatives;
        d["clusters"] = s.cluster.clusters;
        d["noise"] = s.cluster.noise;
        d["epsilon"] = s.cluster.epsilon;
        if (s.evaluation) {
          d["purity"] = s.evaluation->scores.purity;
          d["inverse_purity"] = s.evaluation->scores.inverse_purity;
          d["f_measure"] = s.evaluation->scores.f_measure;
        }
        return d;
      },
      py::arg("corpus"), py::arg("out"), py::arg("truth") = py::none(),
      py::arg("sources") = std::vector<std::string>{"full", "coarse", "asan"},
      py::arg("dim") = 64, py::arg("seed") = 0, py::arg("num_steps") = 64,
      py::arg("cache") = py::none(),
      "Run the whole pipeline with the offline embedder.");
}
