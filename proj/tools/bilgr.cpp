// bilgr command-line tool. Every subcommand reads the shared config, applies
// the global flag overrides, and writes its outputs into --out-dir.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bilgr/config.hpp"
#include "bilgr/error.hpp"
#include "bilgr/graph_io.hpp"
#include "bilgr/pipeline.hpp"

namespace fs = std::filesystem;
using namespace bilgr;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3, kDegenerate = 4 };

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<unsigned> threads;
  bool strict = false;
};

ExperimentConfig resolve(const GlobalFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (f.threads) cfg.threads = *f.threads;
  if (f.strict) cfg.strict = true;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  body(out);
}

template <typename T, typename Fn>
T read_file(const fs::path& path, Fn&& parse) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse(in);
}

void report_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int classify(std::exception_ptr e) {
  try {
    std::rethrow_exception(e);
  } catch (const StageError& s) {
    return classify(s.cause());
  } catch (const ParameterError&) {
    return kConfig;
  } catch (const ParseError&) {
    return kConfig;
  } catch (const DegenerateInputError&) {
    return kDegenerate;
  } catch (const NumericError&) {
    return kNumeric;
  } catch (...) {
    return kFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Criticality prediction with Bayesian graph learning"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags flags;
  app.add_option("--config", flags.config, "Key-value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "Master seed (overrides config)");
  app.add_option("--out-dir", flags.out_dir, "Output directory (overrides config)");
  app.add_option("--threads", flags.threads, "Worker threads for the oracle")->check(CLI::PositiveNumber);
  app.add_flag("--strict", flags.strict, "Treat degenerate input as an error (exit 4)");

  std::string graph_path, labels_path, model_path, split_path, predictions_path;

  auto* generate = app.add_subcommand("generate", "Generate a power-law cluster graph");
  auto* oracle = app.add_subcommand("oracle-score", "Exhaustive criticality scores and labels");
  oracle->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);

  auto* train = app.add_subcommand("train", "Train a classifier on the train split");
  train->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
  train->add_option("--labels", labels_path, "criticality.csv")->required()->check(CLI::ExistingFile);
  train->add_option("--split", split_path, "split.csv; drawn from the seed when absent")->check(CLI::ExistingFile);

  auto* learn = app.add_subcommand("learn-graph", "Estimate a graph from model embeddings");
  learn->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
  learn->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "MC-dropout predictions");
  predict->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
  predict->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--split", split_path, "Only write the test nodes of this split")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("evaluate", "Score predictions against oracle labels");
  eval->add_option("--predictions", predictions_path, "predictions.csv")->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", labels_path, "criticality.csv")->required()->check(CLI::ExistingFile);

  auto* bench = app.add_subcommand("benchmark", "Oracle vs model inference wall-clock");
  bench->add_option("--graph", graph_path, "Edge list")->required()->check(CLI::ExistingFile);
  bench->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);

  auto* run_all = app.add_subcommand("run-all", "Full pipeline with evaluation and noise runs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    const ExperimentConfig cfg = resolve(flags);
    const fs::path out = cfg.out_dir;

    if (*generate) {
      const Graph g = observed_graph(cfg);
      save_edge_list(g, out / "graph_obs.edges");
      std::cout << "wrote " << (out / "graph_obs.edges").string() << " (" << g.node_count() << " nodes, "
                << g.edge_count() << " edges)\n";
    } else if (*oracle) {
      const Graph g = load_edge_list(graph_path);
      const CriticalityResult r = criticality_scores(g, CriticalityOptions{cfg.threads});
      write_file(out / "criticality.csv", [&](std::ostream& o) { write_criticality_csv(r, o); });
      report_warnings(r.warnings);
      if (r.degenerate && cfg.strict) throw DegenerateInputError("all nodes have identical criticality");
      std::cout << "wrote " << (out / "criticality.csv").string() << '\n';
    } else if (*train) {
      const Graph g = load_edge_list(graph_path);
      const auto oracle_rows = read_file<CriticalityResult>(labels_path, read_criticality_csv);
      if (oracle_rows.label.size() != g.node_count()) throw ParameterError("label count does not match graph");
      const NodeSplit split = split_path.empty()
                                  ? split_nodes(g.node_count(), cfg.train_fraction, SeedPlan::from(cfg.seed).split)
                                  : read_file<NodeSplit>(split_path, read_split_csv);
      const auto labeled = labeled_subset(split.train, oracle_rows.label);
      const auto res = train_model(g, labeled, cfg, SeedPlan::from(cfg.seed).train_obs);
      report_warnings(res.warnings);
      if (cfg.strict && !res.warnings.empty()) throw DegenerateInputError(res.warnings.front());
      res.params.save(out / "model.json");
      write_file(out / "split.csv", [&](std::ostream& o) { write_split_csv(split, o); });
      write_file(out / "train_trace.csv", [&](std::ostream& o) { write_loss_trace_csv(res.loss_trace, o); });
      std::cout << "trained " << res.epochs_run << " epochs, final loss " << res.loss_trace.back() << '\n';
    } else if (*learn) {
      const Graph g = load_edge_list(graph_path);
      const auto model = sage::ModelParams::load(model_path);
      const GraphEstimate est = estimate_graph(g, model, cfg);
      report_warnings(est.adjacency.warnings);
      save_edge_list(est.sparse.graph, out / "graph_est.edges");
      write_file(out / "solver_trace.csv", [&](std::ostream& o) { write_solver_trace_csv(est.adjacency, o); });
      std::cout << "estimated graph: " << est.sparse.graph.edge_count() << " edges, " << est.sparse.isolated
                << " isolated nodes, " << est.adjacency.iterations << " iterations, KKT residual "
                << est.adjacency.kkt_residual << '\n';
    } else if (*predict) {
      const Graph g = load_edge_list(graph_path);
      const auto model = sage::ModelParams::load(model_path);
      const Prediction p = predict_nodes(g, model, cfg, SeedPlan::from(cfg.seed).mc);
      report_warnings(p.ensemble.warnings);
      std::vector<NodeId> nodes;
      if (!split_path.empty()) nodes = read_file<NodeSplit>(split_path, read_split_csv).test;
      write_file(out / "predictions.csv", [&](std::ostream& o) { sage::write_prediction_csv(p.ensemble, o, nodes); });
      std::cout << "wrote " << (out / "predictions.csv").string() << '\n';
    } else if (*eval) {
      const auto rows = read_file<std::vector<sage::PredictionRow>>(predictions_path, sage::read_prediction_csv);
      const auto truth = read_file<CriticalityResult>(labels_path, read_criticality_csv).label;
      std::vector<ClassLabel> pred, expected;
      for (const auto& r : rows) {
        if (r.node < 0 || static_cast<std::size_t>(r.node) >= truth.size()) {
          throw ParameterError("prediction for unknown node " + std::to_string(r.node));
        }
        pred.push_back(r.predicted);
        expected.push_back(truth[static_cast<std::size_t>(r.node)]);
      }
      const auto m = evaluate(pred, expected);
      write_file(out / "metrics.json", [&](std::ostream& o) { o << metrics_to_json(m).dump(2) << '\n'; });
      std::cout << "accuracy " << m.accuracy << ", class-1 recall " << m.recall[0] << '\n';
    } else if (*bench) {
      const Graph g = load_edge_list(graph_path);
      const auto model = sage::ModelParams::load(model_path);
      const auto b = benchmark_speedup(g, model, cfg.mc_samples, cfg.mc_dropout_rate, SeedPlan::from(cfg.seed).mc,
                                       cfg.threads);
      const nlohmann::json j = {{"nodes", g.node_count()},
                                {"oracle_seconds", b.oracle_seconds},
                                {"inference_seconds", b.inference_seconds},
                                {"ratio", b.ratio},
                                {"threads", b.threads}};
      write_file(out / "benchmark.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      std::cout << std::fixed << std::setprecision(3) << "oracle " << b.oracle_seconds << " s, inference "
                << b.inference_seconds << " s, ratio " << b.ratio << "x (" << b.threads << " threads)\n";
    } else if (*run_all) {
      const EvalReport r = run_bilgr(cfg);
      report_warnings(r.warnings);
      std::cout << std::fixed << std::setprecision(4) << "accuracy " << r.ensemble.accuracy << " (point "
                << r.point.accuracy << "), class-1 recall " << r.ensemble.recall[0] << '\n';
      for (const auto& n : r.noise) {
        std::cout << "noise " << n.fraction << ": accuracy " << n.ensemble.accuracy << " (drop " << n.accuracy_drop
                  << ")\n";
      }
      std::cout << "artifacts in " << out.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return classify(std::current_exception());
  }
  return kOk;
}
