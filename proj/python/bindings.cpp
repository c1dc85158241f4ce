#include "gisurv/bias_probe.hpp"
#include "gisurv/cli.hpp"
#include "gisurv/disambiguation.hpp"
#include "gisurv/error.hpp"
#include "gisurv/evaluation.hpp"
#include "gisurv/gi_filter.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace gisurv;

namespace {

const TermMap &term_map(const std::string &name) {
    if (name == "gender") return TermMap::gender();
    if (name == "marital") return TermMap::marital();
    throw py::value_error("unknown term map: " + name);
}

Direction direction(const std::string &name) {
    if (name == "a_to_b") return Direction::a_to_b;
    if (name == "b_to_a") return Direction::b_to_a;
    throw py::value_error("direction must be a_to_b or b_to_a");
}

template <class Set>
std::vector<std::string> names(const Set &labels) {
    std::vector<std::string> out;
    for (const auto l : labels) out.emplace_back(to_string(l));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "GI illness surveillance over restaurant reviews";

    py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error"));
    py::register_exception<DataError>(m, "DataError", m.attr("Error"));
    py::register_exception<BackendError>(m, "BackendError", m.attr("Error"));

    m.def("version", [] { return std::string(cli::version()); });

    m.def("keywords", [] { return KeywordList::defaults().terms(); }, "The bundled GI search terms.");

    m.def(
        "match_keywords",
        [](const std::string &text) {
            const auto match = match_keywords(text, KeywordList::defaults());
            return std::vector<std::string>(match.matched_terms.begin(), match.matched_terms.end());
        },
        py::arg("text"), "Sorted keyword terms found in text.");

    m.def(
        "disambiguate_symptoms", [](const std::vector<std::string> &mentions) { return names(disambiguate_symptoms(mentions)); },
        py::arg("mentions"));
    m.def(
        "disambiguate_foods", [](const std::vector<std::string> &spans) { return names(disambiguate_foods(spans)); },
        py::arg("spans"));

    m.def(
        "substitute",
        [](const std::string &text, const std::string &map, const std::string &dir) {
            return apply_substitution(text, term_map(map), direction(dir));
        },
        py::arg("text"), py::arg("term_map") = "gender", py::arg("direction") = "a_to_b");

    m.def(
        "two_proportion_z_test",
        [](std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
            const auto t = two_proportion_z_test(x1, n1, x2, n2);
            return py::make_tuple(t.z, t.p);
        },
        py::arg("x1"), py::arg("n1"), py::arg("x2"), py::arg("n2"), "Returns (z, p).");

    m.def(
        "score_label_sets",
        [](const std::vector<std::pair<std::set<std::string>, std::set<std::string>>> &items,
           const std::vector<std::string> &taxonomy) {
            std::vector<LabelSets> sets;
            sets.reserve(items.size());
            for (const auto &[gold, predicted] : items) sets.push_back({gold, predicted});
            const auto s = score_label_sets(sets, taxonomy);
            py::dict labels;
            for (const auto &l : s.labels)
                labels[py::str(l.label)] =
                    py::dict(py::arg("precision") = l.precision, py::arg("recall") = l.recall, py::arg("f1") = l.f1,
                             py::arg("support") = l.support);
            return py::dict(py::arg("labels") = labels, py::arg("micro_precision") = s.micro_precision,
                            py::arg("micro_recall") = s.micro_recall, py::arg("micro_f1") = s.micro_f1,
                            py::arg("macro_f1_all_labels") = s.macro_f1_all_labels,
                            py::arg("macro_f1_nonzero_support") = s.macro_f1_nonzero_support);
        },
        py::arg("items"), py::arg("taxonomy"), "items: list of (gold, predicted) label sets.");

    m.def(
        "run",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "gisurv");
            std::vector<const char *> argv;
            for (const auto &a : args) argv.push_back(a.c_str());
            std::ostringstream out;
            std::ostringstream err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line tool in-process. Returns (exit code, stdout, stderr).");
}
