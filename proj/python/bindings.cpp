#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bilgr/config.hpp"
#include "bilgr/graph.hpp"
#include "bilgr/graph_io.hpp"
#include "bilgr/graph_learning.hpp"
#include "bilgr/graphsage.hpp"
#include "bilgr/metrics.hpp"
#include "bilgr/pipeline.hpp"
#include "bilgr/robustness.hpp"

namespace py = pybind11;
using namespace bilgr;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig config_from(const py::dict& overrides) {
  std::ostringstream text;
  for (const auto& [k, v] : overrides) {
    text << py::str(k).cast<std::string>() << " = ";
    if (py::isinstance<py::bool_>(v)) {
      text << (v.cast<bool>() ? "true" : "false");
    } else if (py::isinstance<py::list>(v) || py::isinstance<py::tuple>(v)) {
      bool first = true;
      for (const auto& x : v) {
        text << (first ? "" : ",") << py::str(x).cast<std::string>();
        first = false;
      }
    } else {
      text << py::str(v).cast<std::string>();
    }
    text << '\n';
  }
  std::istringstream in(text.str());
  return parse_config(in);
}

}  // namespace

PYBIND11_MODULE(_bilgr, m) {
  m.doc() = "Graph robustness oracle, GraphSAGE criticality classifier and graph learning";

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def(py::init<std::size_t>(), py::arg("node_count"))
      .def("add_edge", &Graph::add_edge, py::arg("u"), py::arg("v"), py::arg("weight") = 1.0)
      .def_property_readonly("node_count", &Graph::node_count)
      .def_property_readonly("edge_count", &Graph::edge_count)
      .def("degree", &Graph::degree)
      .def("has_edge", &Graph::has_edge)
      .def("edge_weight", &Graph::edge_weight)
      .def("component_count", &Graph::component_count)
      .def("edges",
           [](const Graph& g) {
             std::vector<std::tuple<NodeId, NodeId, double>> out;
             for (const auto& e : g.edges()) out.emplace_back(e.u, e.v, e.weight);
             return out;
           })
      .def("to_edge_list",
           [](const Graph& g) {
             std::ostringstream s;
             write_edge_list(g, s);
             return s.str();
           })
      .def_static("from_edge_list",
                  [](const std::string& text) {
                    std::istringstream s(text);
                    return read_edge_list(s);
                  })
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
      .def("__repr__", [](const Graph& g) {
        return "<Graph nodes=" + std::to_string(g.node_count()) + " edges=" + std::to_string(g.edge_count()) + ">";
      });

  m.def(
      "power_law_cluster_graph",
      [](std::size_t n, std::size_t mm, double p, std::uint64_t seed) {
        return generate_power_law_cluster(n, mm, p, RngSeed{seed});
      },
      py::arg("n"), py::arg("m"), py::arg("p"), py::arg("seed"));
  m.def(
      "add_noise_links",
      [](const Graph& g, double fraction, std::uint64_t seed) {
        auto r = add_noise_links(g, fraction, RngSeed{seed});
        return py::make_tuple(r.graph, r.added);
      },
      py::arg("graph"), py::arg("node_fraction"), py::arg("seed"));
  m.def("node_features", [](const Graph& g) { return compute_features(g).values; });
  m.def("laplacian", &laplacian_matrix);
  m.def("effective_graph_resistance", &effective_graph_resistance);
  m.def("mean_pairwise_resistance", [](const Graph& g) { return ResistanceOracle(g).mean_pairwise_resistance(); });
  m.def("label_for_score", &label_for_score);

  py::class_<CriticalityResult>(m, "CriticalityResult")
      .def_readonly("base_resistance", &CriticalityResult::base_resistance)
      .def_readonly("raw_delta", &CriticalityResult::raw_delta)
      .def_readonly("score", &CriticalityResult::score)
      .def_readonly("label", &CriticalityResult::label)
      .def_readonly("degenerate", &CriticalityResult::degenerate)
      .def_readonly("warnings", &CriticalityResult::warnings);
  m.def(
      "criticality_scores",
      [](const Graph& g, unsigned threads) { return criticality_scores(g, CriticalityOptions{threads}); },
      py::arg("graph"), py::arg("threads") = 1, py::call_guard<py::gil_scoped_release>());

  py::class_<sage::ModelParams>(m, "Model")
      .def_static(
          "initialize",
          [](std::size_t feature_dim, std::uint64_t seed) { return sage::ModelParams::initialize(feature_dim, RngSeed{seed}); },
          py::arg("feature_dim") = 2, py::arg("seed") = 0)
      .def_property_readonly("parameter_count", &sage::ModelParams::parameter_count)
      .def("save", &sage::ModelParams::save)
      .def_static("load", &sage::ModelParams::load)
      .def("to_json", [](const sage::ModelParams& p) { return p.to_json().dump(); })
      .def("__eq__", [](const sage::ModelParams& a, const sage::ModelParams& b) { return a == b; });

  m.def(
      "train",
      [](const Graph& g, const std::vector<NodeId>& nodes, const std::vector<ClassLabel>& labels,
         const py::dict& config, std::uint64_t seed) {
        if (nodes.size() != labels.size()) throw ParameterError("nodes and labels differ in length");
        std::vector<sage::LabeledNode> labeled;
        for (std::size_t i = 0; i < nodes.size(); ++i) labeled.push_back({nodes[i], labels[i]});
        auto r = train_model(g, labeled, config_from(config), seed);
        return py::make_tuple(r.params, r.loss_trace);
      },
      py::arg("graph"), py::arg("nodes"), py::arg("labels"), py::arg("config") = py::dict(), py::arg("seed") = 0);
  m.def(
      "embeddings",
      [](const Graph& g, const sage::ModelParams& p) { return sage::extract_embeddings(g, compute_features(g), p); },
      py::arg("graph"), py::arg("model"));
  m.def(
      "predict",
      [](const Graph& g, const sage::ModelParams& p) { return sage::predict_classes(g, compute_features(g), p); },
      py::arg("graph"), py::arg("model"));
  m.def(
      "mc_dropout_predict",
      [](const Graph& g, const sage::ModelParams& p, std::size_t samples, double rate, std::uint64_t seed) {
        auto r = sage::mc_dropout_predict(g, compute_features(g), p, samples, rate, seed);
        py::dict out;
        out["mean"] = r.mean;
        out["std"] = r.stddev;
        out["predicted"] = r.predicted;
        out["ci_halfwidth"] = r.ci_halfwidth;
        return out;
      },
      py::arg("graph"), py::arg("model"), py::arg("samples") = 100, py::arg("rate") = 0.5, py::arg("seed") = 0);

  m.def(
      "learn_graph",
      [](const Matrix& z, double alpha, double beta, int max_iters) {
        GraphLearnConfig cfg;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.max_iters = max_iters;
        auto r = learn_graph_map(DistanceMatrix{z}, cfg);
        py::dict out;
        out["weights"] = r.weights;
        out["objective"] = r.objective;
        out["iterations"] = r.iterations;
        out["kkt_residual"] = r.kkt_residual;
        out["converged"] = r.converged;
        return out;
      },
      py::arg("z"), py::arg("alpha") = 1.0, py::arg("beta") = 0.5, py::arg("max_iters") = 5000);
  m.def("distance_matrix", [](const Matrix& e) { return distance_matrix(e).values; });

  m.def(
      "split_nodes",
      [](std::size_t n, double fraction, std::uint64_t seed) {
        auto s = split_nodes(n, fraction, seed);
        return py::make_tuple(s.train, s.test);
      },
      py::arg("n"), py::arg("train_fraction"), py::arg("seed"));
  m.def(
      "evaluate",
      [](const std::vector<ClassLabel>& predicted, const std::vector<ClassLabel>& truth) {
        return to_python(metrics_to_json(evaluate(predicted, truth)));
      },
      py::arg("predicted"), py::arg("truth"));

  m.def(
      "run",
      [](const py::dict& config) {
        const ExperimentConfig cfg = config_from(config);
        EvalReport r;
        {
          py::gil_scoped_release release;
          r = run_bilgr(cfg);
        }
        py::dict out = to_python(report_to_json(r));
        out["timings"] = to_python(timings_to_json(r.timings));
        return out;
      },
      py::arg("config") = py::dict(),
      "Runs the full pipeline. Keys are the config-file keys, e.g. {'nodes': 100, 'out_dir': ''}.");
}
