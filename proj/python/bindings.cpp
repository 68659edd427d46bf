#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "laplab/error.hpp"
#include "laplab/estimators.hpp"
#include "laplab/graph.hpp"
#include "laplab/harness.hpp"
#include "laplab/io.hpp"
#include "laplab/model.hpp"
#include "laplab/parallel.hpp"

namespace py = pybind11;
using namespace laplab;

namespace {

Dataset dataset_from(const py::array_t<int, py::array::c_style | py::array::forcecast>& rows) {
  if (rows.ndim() != 2) throw std::invalid_argument("data must be a 2-d array of shape (N, M)");
  const auto n = static_cast<std::size_t>(rows.shape(0)), m = static_cast<std::size_t>(rows.shape(1));
  return Dataset(m, std::vector<int>(rows.data(), rows.data() + n * m));
}

py::array_t<int> array_from(const Dataset& d) {
  py::array_t<int> out({d.num_samples(), d.num_vars()});
  std::copy(d.values().begin(), d.values().end(), out.mutable_data());
  return out;
}

std::vector<std::vector<NodeId>> clique_lists(const CliqueSystem& cs) {
  std::vector<std::vector<NodeId>> out;
  for (const auto& c : cs) out.push_back(c.nodes());
  return out;
}

MrfModel model_from(const std::vector<std::vector<NodeId>>& cliques, const std::vector<double>& params,
                    std::size_t num_nodes, std::optional<Cardinalities> cards,
                    const std::vector<UndirectedGraph::Edge>& extra_edges) {
  std::vector<Clique> cs;
  for (const auto& c : cliques) cs.emplace_back(c);
  auto s = ModelStructure::from_cliques(num_nodes, CliqueSystem(std::move(cs)), cards.value_or(Cardinalities(num_nodes, 2)),
                                        extra_edges);
  return MrfModel(std::move(s), params);
}

py::dict row_dict(const ResultRow& r) {
  py::dict d;
  d["estimator"] = r.estimator;
  d["N"] = r.n;
  d["replicate"] = r.replicate;
  d["clique"] = r.clique;
  d["abs_error"] = r.abs_error;
  d["rmse"] = r.rmse;
  d["wall_ms"] = r.wall_ms;
  d["blocks"] = r.blocks;
  d["comm_units"] = r.comm_units;
  d["status"] = r.status;
  return d;
}

}  // namespace

PYBIND11_MODULE(_laplab, m) {
  m.doc() = "Local and consensus estimators for discrete Markov random fields";

  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_RuntimeError);
  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<MrfModel>(m, "Model")
      .def(py::init(&model_from), py::arg("cliques"), py::arg("parameters"), py::arg("num_nodes"),
           py::arg("cards") = py::none(), py::arg("extra_edges") = std::vector<UndirectedGraph::Edge>{},
           "Model from clique node lists and packed free parameters.")
      .def_property_readonly("num_nodes", [](const MrfModel& self) { return self.structure().num_nodes(); })
      .def_property_readonly("dimension", [](const MrfModel& self) { return self.structure().dimension(); })
      .def_property_readonly("cards", [](const MrfModel& self) { return self.structure().cards(); })
      .def_property_readonly("cliques", [](const MrfModel& self) { return clique_lists(self.structure().cliques()); })
      .def_property_readonly("edges", [](const MrfModel& self) { return self.structure().graph().edges(); })
      .def_property_readonly("parameters", &MrfModel::parameters)
      .def("log_unnormalized", [](const MrfModel& self, const std::vector<int>& x) { return self.log_unnormalized(x); })
      .def("log_partition_function", [](const MrfModel& self) { return self.log_partition_function(); })
      .def(
          "marginal",
          [](const MrfModel& self, const std::vector<NodeId>& nodes) {
            return self.exact_marginal(make_node_set(nodes)).values;
          },
          py::arg("nodes"), "Exact marginal over the sorted nodes, row-major with the first node most significant.")
      .def(
          "sample",
          [](const MrfModel& self, std::size_t n, std::uint64_t seed, const std::string& sampler, std::size_t burn_in,
             std::size_t thinning) {
            Rng rng(seed);
            if (sampler == "exact") return array_from(sample_exact(self, n, rng));
            if (sampler == "gibbs") return array_from(sample_gibbs(self, n, GibbsConfig{burn_in, thinning}, rng));
            throw std::invalid_argument("sampler must be 'exact' or 'gibbs'");
          },
          py::arg("n"), py::arg("seed") = 1, py::arg("sampler") = "exact", py::arg("burn_in") = GibbsConfig{}.burn_in,
          py::arg("thinning") = GibbsConfig{}.thinning)
      .def("save", [](const MrfModel& self, const std::filesystem::path& p) { save_model(p, self); })
      .def_static("load", &load_model)
      .def("to_text", [](const MrfModel& self) {
        std::ostringstream out;
        write_model(out, self);
        return out.str();
      })
      .def_static("from_text", [](const std::string& text) {
        std::istringstream in(text);
        return read_model(in);
      });

  m.def("generate_model", [](const std::string& spec, int cards, double weight, std::uint64_t seed) {
    return generate_model(ModelSpec::parse(spec), cards, weight, seed);
  }, py::arg("spec"), py::arg("cards") = 2, py::arg("weight") = 1.0, py::arg("seed") = 1,
        "grid:RxC, full:M, bipartite:MxN or file:<path>; parameters uniform on [-weight, weight].");

  m.def(
      "check",
      [](const std::vector<UndirectedGraph::Edge>& edges, std::size_t num_nodes, const std::vector<NodeId>& domain,
         const std::vector<NodeId>& clique) {
        const UndirectedGraph g(num_nodes, edges);
        const auto A = make_node_set(domain);
        py::dict out;
        out["strong_lap"] = strong_lap_satisfied(g, A, Clique(clique));
        std::vector<UndirectedGraph::Edge> added;
        for (const auto& e : induced_edges(g, A)) {
          if (!g.has_edge(e.first, e.second)) added.push_back(e);
        }
        out["induced_edges"] = added;
        out["marginal_cliques"] = clique_lists(marginal_clique_system(g, A).sorted());
        return out;
      },
      py::arg("edges"), py::arg("num_nodes"), py::arg("domain"), py::arg("clique"));

  m.def(
      "estimate",
      [](const MrfModel& structure, const py::array_t<int, py::array::c_style | py::array::forcecast>& data,
         const std::string& estimator, double grad_tol, int max_iters, double ridge, std::size_t threads) {
        const auto d = dataset_from(data);
        RunOptions ro;
        ro.fit.opt.grad_tol = grad_tol;
        ro.fit.opt.max_iters = max_iters;
        ro.fit.ridge = ridge;
        ro.threads = resolve_threads(threads);
        EstimatorRun run;
        {
          py::gil_scoped_release release;
          run = run_estimator(parse_estimator(estimator), structure.structure(), d, ro);
        }
        py::dict out;
        out["name"] = run.name;
        out["parameters"] = run.estimate.params.values;
        out["status"] = run.status;
        out["blocks"] = run.blocks;
        out["comm_units"] = run.comm_units;
        out["iterations"] = run.estimate.iterations;
        return out;
      },
      py::arg("structure"), py::arg("data"), py::arg("estimator") = "lap-full", py::arg("grad_tol") = 1e-8,
      py::arg("max_iters") = 5000, py::arg("ridge") = 0.0, py::arg("threads") = 1,
      "Fit one estimator on a (N, M) integer array; only the structure of the model is used.");

  m.def("parse_estimator", [](const std::string& name) { return parse_estimator(name).name; },
        "Canonical estimator name; raises ValueError on unknown names.");

  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        std::istringstream in(config_text);
        const auto cfg = parse_config(in);
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_experiment(cfg);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("config"), "Runs a `key = value` experiment config and returns the result rows as dicts.");

  m.def(
      "experiment_csv",
      [](const std::string& config_text) {
        std::istringstream in(config_text);
        const auto cfg = parse_config(in);
        std::ostringstream out;
        {
          py::gil_scoped_release release;
          write_csv(out, run_experiment(cfg));
        }
        return out.str();
      },
      py::arg("config"));
}
