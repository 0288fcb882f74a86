// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The symscreen Authors

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "symscreen/cli.hpp"
#include "symscreen/corpus.hpp"
#include "symscreen/error.hpp"
#include "symscreen/eval.hpp"
#include "symscreen/extract.hpp"
#include "symscreen/screen.hpp"
#include "symscreen/taxonomy.hpp"

namespace py = pybind11;
using namespace symscreen;

namespace {

std::vector<GoldLabel> gold_from(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return read_gold(in);
}

std::vector<Detection> detections_from(const std::string& jsonl) {
  std::istringstream in(jsonl);
  return read_detections(in);
}

}  // namespace

PYBIND11_MODULE(_symscreen, m) {
  m.doc() = "Native core of the symscreen pipeline";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NotFoundError>(m, "NotFoundError", PyExc_LookupError);
  py::register_exception<ConflictError>(m, "ConflictError", PyExc_RuntimeError);
  py::register_exception<RuntimeFailure>(m, "RuntimeFailure", PyExc_RuntimeError);

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "symscreen");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command line with `args`; returns (exit_code, stdout, stderr).");

  m.def("taxonomy_toml", [] { return Taxonomy::canonical().to_toml(); });
  m.def("category_ids", [] {
    std::vector<std::string> ids;
    for (const auto& c : taxonomy()) ids.push_back(c.id);
    return ids;
  });

  m.def(
      "truncate",
      [](const std::string& text, std::size_t limit) {
        auto r = symscreen::truncate(text, limit);
        return py::make_tuple(r.text, r.was_truncated);
      },
      py::arg("text"), py::arg("char_limit"));

  m.def(
      "chat_prompt",
      [](const std::string& category_id, const std::string& note_text) {
        const auto& tax = Taxonomy::canonical();
        const auto& cat = tax.at(category_id);
        return build_chat_prompt(cat, note_text, tax.shots_for(cat)).to_json().dump();
      },
      py::arg("category_id"), py::arg("note_text"), "Chat prompt for one pair as a JSON string.");

  m.def(
      "entailment_prompt",
      [](const std::string& category_id, const std::string& note_text) {
        return build_entailment_prompt(Taxonomy::canonical().at(category_id), note_text);
      },
      py::arg("category_id"), py::arg("note_text"));

  m.def(
      "parse_chat_response",
      [](const std::string& raw) -> py::object {
        const auto parsed = parse_chat_response(raw);
        const auto* v = std::get_if<ChatVerdict>(&parsed);
        if (!v) return py::none();
        return py::make_tuple(v->present, v->quote);
      },
      py::arg("raw"), "(present, quote) or None when unparseable.");

  m.def("parse_entailment_response", &parse_entailment_response, py::arg("raw"));

  m.def(
      "score_counts",
      [](const std::string& category_id, std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
        auto s = score_counts(category_id, tp, fp, fn, tn);
        return py::make_tuple(s.precision, s.recall, s.f1);
      },
      py::arg("category_id"), py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));

  m.def(
      "evaluate",
      [](const std::string& gold_jsonl, const std::string& detections_jsonl, const std::string& format,
         bool na_as_zero) {
        const auto gold = gold_from(gold_jsonl);
        const auto dets = detections_from(detections_jsonl);
        const auto report =
            score(gold, dets, Taxonomy::canonical(), na_as_zero ? NaPolicy::as_zero : NaPolicy::skip);
        return render_report(report, parse_report_format(format));
      },
      py::arg("gold_jsonl"), py::arg("detections_jsonl"), py::arg("format") = "jsonl", py::arg("na_as_zero") = false);

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const auto f = auc_fraction(scores, labels);
        return py::make_tuple(f.value(), f.twice_wins, f.pairs);
      },
      py::arg("scores"), py::arg("labels"), "(auc, twice_wins, pairs) from the Mann-Whitney statistic.");
}
