#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "chartfact/correct.hpp"
#include "chartfact/dataio.hpp"
#include "chartfact/entail.hpp"
#include "chartfact/error.hpp"
#include "chartfact/metrics.hpp"
#include "chartfact/negden.hpp"
#include "chartfact/wire.hpp"

namespace py = pybind11;
using namespace chartfact;

namespace {

// JSON crosses the boundary through the json module; records are small.
template <class J>
py::object to_py(const J& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::handle& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).template cast<std::string>());
}

Table table_arg(const py::handle& obj) {
  if (py::isinstance<Table>(obj)) return obj.cast<Table>();
  return parse_linearized(obj.cast<std::string>());
}

py::object g_error_type;

}  // namespace

PYBIND11_MODULE(_chartfact, m) {
  m.doc() = "Chart caption factuality toolkit";

  g_error_type = py::reinterpret_borrow<py::object>(
      PyErr_NewException("chartfact.ChartfactError", PyExc_ValueError, nullptr));
  m.attr("ChartfactError") = g_error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = g_error_type(e.what());
      inst.attr("code") = std::string(errc_name(e.code()));
      inst.attr("index") = e.index() ? py::object(py::int_(*e.index())) : py::object(py::none());
      PyErr_SetObject(g_error_type.ptr(), inst.ptr());
    }
  });

  py::class_<Table>(m, "Table")
      .def(py::init([](std::vector<std::string> header, std::vector<std::vector<std::string>> rows,
                       std::optional<std::string> title) {
             return Table::from_strings(std::move(header), rows).with_title(std::move(title));
           }),
           py::arg("header"), py::arg("rows"), py::arg("title") = py::none())
      .def_property_readonly("header", &Table::header)
      .def_property_readonly("rows",
                             [](const Table& t) {
                               std::vector<std::vector<std::string>> out;
                               for (const auto& row : t.rows()) {
                                 auto& r = out.emplace_back();
                                 for (const auto& c : row) r.push_back(c.raw());
                               }
                               return out;
                             })
      .def_property_readonly("title", &Table::title)
      .def("numeric",
           [](const Table& t, std::size_t row, std::size_t col) -> std::optional<double> {
             const auto& n = t.at(row, col).numeric();
             if (!n) return std::nullopt;
             return n->value;
           })
      .def("to_linearized", [](const Table& t) { return serialize_linearized(t); })
      .def("__eq__", [](const Table& a, const Table& b) { return a == b; })
      .def("__repr__", [](const Table& t) { return "Table(" + serialize_linearized(t) + ")"; });

  m.def("parse_linearized", &parse_linearized, py::arg("text"));
  m.def("serialize_linearized", [](const py::handle& t) { return serialize_linearized(table_arg(t)); });

  m.def("segment_sentences", [](std::string_view caption) {
    std::vector<std::string> out;
    for (const auto& s : segment_sentences(caption)) out.push_back(s.text);
    return out;
  });

  m.def("sentence_score", [](double yes, double no) { return sentence_score({yes, no}); },
        py::arg("logit_yes"), py::arg("logit_no"));
  m.def("caption_score", &caption_score, py::arg("sentence_scores"));
  m.def("build_prompt", &build_prompt);

  m.def(
      "score_caption",
      [](const std::string& caption, const py::handle& table, std::optional<std::string> image_uri,
         const std::string& backend, std::size_t concurrency) {
        ChartRef chart{"chart", std::move(image_uri), std::nullopt};
        if (!table.is_none()) chart.gold_table = table_arg(table);
        auto b = make_entailment_backend(backend);
        py::gil_scoped_release release;
        const auto report = score_caption(chart, Caption::from_text(caption), *b, ScoreOptions{concurrency});
        py::gil_scoped_acquire acquire;
        return to_py(to_json(report));
      },
      py::arg("caption"), py::arg("table") = py::none(), py::arg("image_uri") = py::none(),
      py::arg("backend") = "oracle", py::arg("concurrency") = 4);

  m.def(
      "correct_caption",
      [](const std::string& caption, const py::handle& table, std::optional<std::string> image_uri,
         const std::string& c2t, const std::string& rectifier) {
        ChartRef chart{"chart", std::move(image_uri), std::nullopt};
        if (!table.is_none()) chart.gold_table = table_arg(table);
        auto stage1 = make_chart2table_backend(c2t);
        auto stage2 = make_rectifier_backend(rectifier);
        BatchOutcome outcome{"chart", correct_caption(chart, Caption::from_text(caption), *stage1, *stage2), "", ""};
        return to_py(to_json(outcome));
      },
      py::arg("caption"), py::arg("table") = py::none(), py::arg("image_uri") = py::none(),
      py::arg("c2t_backend") = "gold", py::arg("rectifier_backend") = "oracle");

  m.def(
      "generate_negatives",
      [](const py::list& corpus, std::uint64_t seed, std::size_t max_per_sentence) {
        Corpus c;
        for (const auto& item : corpus) {
          const auto j = from_py(item);
          CorpusEntry e;
          e.chart.id = j.at("chart_id").get<std::string>();
          if (j.contains("table")) e.chart.gold_table = parse_linearized(j["table"].get<std::string>());
          e.sentences = j.at("sentences").get<std::vector<std::string>>();
          c.push_back(std::move(e));
        }
        GenerationConfig cfg;
        cfg.max_per_sentence = max_per_sentence;
        py::list out;
        for (const auto& inst : generate_all(c, TrendLexicon::defaults(), seed, cfg)) out.append(to_py(to_json(inst)));
        return out;
      },
      py::arg("corpus"), py::arg("seed") = 0, py::arg("max_per_sentence") = 2);

  m.def("levenshtein", py::overload_cast<std::string_view, std::string_view>(&levenshtein));
  m.def("kendall_tau", [](std::vector<double> metric, std::vector<double> human) {
    return kendall_tau({std::move(metric), std::move(human)});
  });
  m.def("roc_auc", [](const std::vector<double>& scores, const std::vector<bool>& labels) {
    return roc_auc(scores, labels);
  });
  m.def("rms_f1", [](const py::handle& predicted, const py::handle& gold) {
    return rms_f1(table_arg(predicted), table_arg(gold));
  });
  m.def("fleiss_kappa", [](std::vector<std::vector<std::uint32_t>> counts) {
    return fleiss_kappa(AnnotationMatrix(std::move(counts)));
  });
  m.def("majority_agreement", [](std::vector<std::vector<std::uint32_t>> counts) {
    return majority_agreement(AnnotationMatrix(std::move(counts)));
  });

  m.def("canonical_json", [](const py::handle& body) { return wire::canonical(from_py(body)); });
  m.def("content_hash", [](const std::string& route, const py::handle& body) {
    return wire::content_hash(route, from_py(body));
  });
  m.def("fixture_path", [](const std::filesystem::path& dir, const std::string& route, const py::handle& body) {
    return wire::fixture_path(dir, route, from_py(body));
  });

  m.def("load_dataset", [](const std::filesystem::path& path, bool released) {
    py::list out;
    for (const auto& inst : released ? import_released(path) : load_dataset(path)) out.append(to_py(to_json(inst)));
    return out;
  }, py::arg("path"), py::arg("released") = false);
  m.def("split_stats", [](const std::filesystem::path& path, bool released) {
    const auto s = split_stats(released ? import_released(path) : load_dataset(path));
    py::dict out;
    auto row = [](const SplitRow& r) {
      py::dict d;
      d["sentences"] = py::make_tuple(r.sentences.factual, r.sentences.non_factual);
      d["captions"] = py::make_tuple(r.captions.factual, r.captions.non_factual);
      return d;
    };
    for (auto split : kAllSplits) out[py::str(std::string(data_split_name(split)))] = row(s.at(split));
    out["total"] = row(s.total);
    return out;
  }, py::arg("path"), py::arg("released") = false);
}
