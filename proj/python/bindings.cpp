// Copyright 2026 The Crashbench Authors.
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

// Python bindings for the patch analysis, metrics and pipeline entry points.
// Structured values cross the boundary as plain dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crashbench/analysis.hpp"
#include "crashbench/digest.hpp"
#include "crashbench/error.hpp"
#include "crashbench/metrics.hpp"
#include "crashbench/patch.hpp"
#include "crashbench/pipeline.hpp"
#include "json.hpp"

namespace py = pybind11;
namespace cb = crashbench;
using nlohmann::json;

namespace {

py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::handle& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

cb::metrics::Estimator estimator_from(const std::string& name) {
  if (name == "unbiased") return cb::metrics::Estimator::kUnbiased;
  if (name == "first_k") return cb::metrics::Estimator::kFirstK;
  throw cb::InvalidField("estimator", "expected 'unbiased' or 'first_k'");
}

cb::metrics::AttemptMatrix matrix_from(
    const std::map<std::string, std::vector<bool>>& rows) {
  cb::metrics::AttemptMatrix m;
  m.rows = rows;
  return m;
}

std::vector<cb::eval::EvaluationRecord> records_from(const py::list& records) {
  std::vector<cb::eval::EvaluationRecord> out;
  for (const auto& r : records) out.push_back(from_py(r).get<cb::eval::EvaluationRecord>());
  return out;
}

cb::patch::DiffAnalysis analyze(const std::string& diff, const cb::patch::FileMap& tree) {
  const cb::patch::MemoryTree t(tree);
  return cb::patch::extract_modified_functions(cb::patch::parse_unified_diff(diff), t);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "crashbench core: patch analysis, metrics and pipeline";

  // Leaked on purpose: the type must outlive module teardown.
  static PyObject* error = PyErr_NewException("crashbench._core.CrashbenchError",
                                              PyExc_RuntimeError, nullptr);
  m.attr("CrashbenchError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const cb::Error& e) {
      py::object exc = py::handle(error)(e.what());
      exc.attr("code") = e.code();
      PyErr_SetObject(error, exc.ptr());
    }
  });

  m.def("sha256_hex", [](const py::bytes& data) {
    return cb::sha256_hex(std::string(data));
  }, py::arg("data"));

  m.def("normalize_diff", [](const std::string& text) {
    return cb::patch::serialize(cb::patch::parse_unified_diff(text));
  }, py::arg("text"), "Parse a unified diff and render it with canonical headers.");

  m.def("patch_size", [](const std::string& text) {
    const auto s = cb::patch::patch_size(cb::patch::parse_unified_diff(text));
    return py::make_tuple(s.loc, s.files);
  }, py::arg("text"), "Return (changed lines, touched files).");

  m.def("diff_trees", &cb::patch::diff_trees, py::arg("before"), py::arg("after"));

  m.def("apply_patch", [](const cb::patch::FileMap& files, const std::string& diff) {
    return cb::patch::apply_patch(files, cb::patch::parse_unified_diff(diff));
  }, py::arg("files"), py::arg("diff"));

  m.def("modified_functions", [](const std::string& diff, const cb::patch::FileMap& tree) {
    return to_py(json(analyze(diff, tree)));
  }, py::arg("diff"), py::arg("tree"),
     "Files and 'path::function' names touched by a diff against a tree.");

  m.def("localization_iou", [](const std::string& agent_diff, const std::string& dev_diff,
                               const cb::patch::FileMap& tree) {
    const auto s = cb::patch::localization_iou(analyze(agent_diff, tree),
                                               analyze(dev_diff, tree));
    return py::make_tuple(s.file_iou, s.function_iou);
  }, py::arg("agent_diff"), py::arg("dev_diff"), py::arg("tree"),
     "Return (file IoU, function IoU) of two diffs against one tree.");

  m.def("round_half_even", &cb::metrics::round_half_even, py::arg("x"),
        py::arg("decimals") = 2);
  m.def("relative_change", &cb::metrics::relative_change, py::arg("before"),
        py::arg("after"));
  m.def("pass_at_k_single", &cb::metrics::pass_at_k_single, py::arg("n"),
        py::arg("c"), py::arg("k"));

  m.def("pass_at_k", [](const std::map<std::string, std::vector<bool>>& rows, long k,
                        const std::string& estimator) {
    return cb::metrics::pass_at_k(matrix_from(rows), k, estimator_from(estimator));
  }, py::arg("rows"), py::arg("k"), py::arg("estimator") = "unbiased",
     "Percentage over bugs; rows map a bug to its ordered attempt outcomes.");

  m.def("mean_at_k", [](const std::map<std::string, std::vector<bool>>& rows, long k) {
    return cb::metrics::mean_at_k(matrix_from(rows), k);
  }, py::arg("rows"), py::arg("k"));

  m.def("judge_alignment", [](long tp, long tn, long fp, long fn) {
    const auto a = cb::metrics::judge_alignment({tp, tn, fp, fn});
    py::dict d;
    d["accuracy"] = a.accuracy;
    d["precision"] = a.precision;
    d["recall"] = a.recall;
    d["f1"] = a.f1;
    return d;
  }, py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));

  m.def("summarize", [](const py::list& records) {
    return to_py(json(cb::metrics::summarize(records_from(records))));
  }, py::arg("records"), "Aggregate evaluation records (dicts) into a metrics report.");

  m.def("run_pipeline", [](const std::string& config_path,
                           std::optional<std::vector<std::string>> stages, bool force) {
    const auto config = cb::pipeline::ExperimentConfig::load(config_path);
    cb::pipeline::PipelineOptions opts;
    opts.force = force;
    if (stages) {
      opts.stages.clear();
      for (const auto& s : *stages) opts.stages.push_back(cb::pipeline::stage_from_string(s));
    }
    cb::pipeline::PipelineSummary summary;
    {
      py::gil_scoped_release release;
      summary = cb::pipeline::run_pipeline(config, opts);
    }
    return to_py(summary.to_json());
  }, py::arg("config"), py::arg("stages") = py::none(), py::arg("force") = false,
     "Run pipeline stages for an experiment config file and return the summary.");
}
