#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cascademix/cascade.hpp"
#include "cascademix/experiment.hpp"
#include "cascademix/io.hpp"
#include "cascademix/moments.hpp"
#include "cascademix/oracle.hpp"
#include "cascademix/recovery.hpp"

namespace py = pybind11;
namespace cm = cascademix;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& obj) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<cm::EventQuery> parse_queries(const std::vector<std::string>& texts) {
  std::vector<cm::EventQuery> out;
  for (const auto& t : texts) out.push_back(cm::parse_query(t));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-component cascade mixtures";
  py::register_exception<cm::Error>(m, "CascadeMixError", PyExc_ValueError);

  py::class_<cm::WeightPair>(m, "WeightPair")
      .def(py::init<double, double>(), py::arg("p"), py::arg("q"))
      .def_readwrite("p", &cm::WeightPair::p)
      .def_readwrite("q", &cm::WeightPair::q)
      .def("__repr__", [](const cm::WeightPair& w) { return "WeightPair(" + std::to_string(w.p) + ", " + std::to_string(w.q) + ")"; });

  py::class_<cm::MixtureModel>(m, "MixtureModel")
      .def(py::init<int, double, bool>(), py::arg("n"), py::arg("alpha") = 0.5, py::arg("directed") = false)
      .def_property_readonly("n", &cm::MixtureModel::n_vertices)
      .def_property_readonly("alpha", &cm::MixtureModel::alpha)
      .def_property_readonly("directed", &cm::MixtureModel::directed)
      .def("set_edge",
           [](cm::MixtureModel& self, cm::Vertex u, cm::Vertex v, double p, double q) { self.set_edge(u, v, {p, q}); },
           py::arg("u"), py::arg("v"), py::arg("p"), py::arg("q"))
      .def("weight", [](const cm::MixtureModel& self, cm::Vertex u, cm::Vertex v) {
        auto w = self.weight(u, v);
        return py::make_tuple(w.p, w.q);
      })
      .def("edges",
           [](const cm::MixtureModel& self) {
             py::list out;
             for (const auto& [e, w] : self.edges()) out.append(py::make_tuple(e.u, e.v, w.p, w.q));
             return out;
           })
      .def("to_json", [](const cm::MixtureModel& self) { return to_py(cm::model_to_json(self)); })
      .def_static("from_json", [](const py::object& doc) { return cm::model_from_json(from_py(doc)); })
      .def("__eq__", [](const cm::MixtureModel& a, const cm::MixtureModel& b) { return a == b; });

  m.def(
      "random_mixture",
      [](int n, const std::string& topology, double w_lo, double w_hi, double min_delta, double alpha,
         std::uint64_t seed, double p_edge) {
        return cm::random_mixture(n, {cm::parse_topology(topology), p_edge}, {w_lo, w_hi}, min_delta, alpha, seed);
      },
      py::arg("n"), py::arg("topology") = "star", py::arg("w_lo") = 0.2, py::arg("w_hi") = 0.8,
      py::arg("min_delta") = 0.2, py::arg("alpha") = 0.5, py::arg("seed") = 1, py::arg("p_edge") = 0.4);

  m.def(
      "random_directed_mixture",
      [](int n, int out_degree, double w_lo, double w_hi, double min_delta, double alpha, std::uint64_t seed) {
        return cm::random_directed_mixture(n, out_degree, {w_lo, w_hi}, min_delta, alpha, seed);
      },
      py::arg("n"), py::arg("out_degree") = 3, py::arg("w_lo") = 0.2, py::arg("w_hi") = 0.8,
      py::arg("min_delta") = 0.2, py::arg("alpha") = 0.5, py::arg("seed") = 1);

  m.def("validate_conditions", [](const cm::MixtureModel& model) {
    auto r = cm::validate_conditions(model);
    py::dict d;
    d["connected"] = r.connected;
    d["edge_count"] = r.edge_count;
    d["delta"] = r.delta;
    d["p_min"] = r.p_min;
    d["condition1_ok"] = r.condition1_ok;
    d["condition2_ok"] = r.condition2_ok;
    py::list off;
    for (auto e : r.offending_items) off.append(py::make_tuple(e.u, e.v));
    d["offending_items"] = off;
    return d;
  });

  m.def("max_weight_error_up_to_swap", &cm::max_weight_error_up_to_swap);

  m.def(
      "run_corpus",
      [](const cm::MixtureModel& model, std::size_t count, std::uint64_t seed, int workers) {
        auto corpus = cm::run_corpus(model, count, seed, workers);
        py::list out;
        for (const auto& c : corpus.cascades) {
          py::list ev;
          for (const auto& e : c.events) ev.append(py::make_tuple(e.time, e.infector, e.infectee));
          out.append(py::make_tuple(c.source, ev));
        }
        return out;
      },
      py::arg("model"), py::arg("count"), py::arg("seed"), py::arg("workers") = 1,
      "List of (source, [(t, infector, infectee), ...]).");

  m.def(
      "exact_moment",
      [](const cm::MixtureModel& model, const std::string& query) {
        return cm::exact_moment(model, cm::parse_query(query));
      },
      py::arg("model"), py::arg("query"));

  m.def(
      "exact_table",
      [](const cm::MixtureModel& model, const std::string& mode) {
        return to_py(cm::table_to_json(cm::exact_table(model, cm::recovery_queries(model, cm::parse_mode(mode)))));
      },
      py::arg("model"), py::arg("mode") = "balanced");

  m.def(
      "empirical_table",
      [](const cm::MixtureModel& model, std::size_t count, std::uint64_t seed, const std::string& mode, int workers) {
        auto corpus = cm::run_corpus(model, count, seed, workers);
        auto table = cm::build_table(corpus, cm::recovery_queries(model, cm::parse_mode(mode)), workers);
        table.directed = model.directed();
        return to_py(cm::table_to_json(table));
      },
      py::arg("model"), py::arg("count"), py::arg("seed"), py::arg("mode") = "balanced", py::arg("workers") = 1);

  m.def(
      "estimate_moments",
      [](const cm::MixtureModel& model, std::size_t count, std::uint64_t seed, const std::vector<std::string>& queries) {
        auto corpus = cm::run_corpus(model, count, seed);
        return to_py(cm::table_to_json(cm::build_table(corpus, parse_queries(queries))));
      },
      py::arg("model"), py::arg("count"), py::arg("seed"), py::arg("queries"));

  m.def(
      "recover",
      [](const py::object& table, const std::string& mode, std::optional<double> alpha, bool estimate_alpha,
         std::optional<double> threshold) {
        cm::RecoverRequest req;
        req.mode = cm::parse_mode(mode);
        req.alpha = alpha;
        req.estimate_alpha = estimate_alpha;
        cm::RecoveryOptions opts;
        opts.edge_threshold = threshold;
        return to_py(cm::recovered_to_json(cm::recover(cm::table_from_json(from_py(table)), req, opts)));
      },
      py::arg("table"), py::arg("mode") = "balanced", py::arg("alpha") = py::none(),
      py::arg("estimate_alpha") = false, py::arg("threshold") = py::none());

  m.def(
      "estimate_alpha", [](const py::object& table) { return cm::estimate_alpha(cm::table_from_json(from_py(table))); },
      py::arg("table"));

  m.def(
      "run_experiment",
      [](const std::string& spec_text, const std::string& format) {
        return cm::emit_report(cm::run_experiment(cm::parse_spec(spec_text)), cm::parse_format(format));
      },
      py::arg("spec"), py::arg("format") = "csv");

  m.attr("ORACLE_BUDGET") = cm::kOracleBudget;
}
