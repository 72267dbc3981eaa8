#include "bilgr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "bilgr/error.hpp"
#include "bilgr/graph_io.hpp"
#include "text_util.hpp"

namespace bilgr {

SeedPlan SeedPlan::from(std::uint64_t master) {
  Rng r(master);
  SeedPlan s{};
  s.graph = master;
  s.split = r.next();
  s.train_obs = r.next();
  s.train_est = r.next();
  s.mc = r.next();
  s.noise = r.next();
  return s;
}

Graph observed_graph(const ExperimentConfig& cfg) {
  if (!cfg.graph_file.empty()) return load_edge_list(cfg.graph_file);
  return generate_power_law_cluster(cfg.nodes, cfg.attach_edges, cfg.triad_probability, RngSeed{cfg.seed});
}

std::vector<sage::LabeledNode> labeled_subset(std::span<const NodeId> nodes, std::span<const ClassLabel> labels) {
  std::vector<sage::LabeledNode> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) {
    if (v < 0 || static_cast<std::size_t>(v) >= labels.size()) throw IndexError("labeled node out of range");
    out.push_back({v, labels[static_cast<std::size_t>(v)]});
  }
  return out;
}

sage::TrainResult train_model(const Graph& g, std::span<const sage::LabeledNode> labeled,
                              const ExperimentConfig& cfg, std::uint64_t seed) {
  nn::TrainHyperparams hyper = cfg.train;
  hyper.seed = seed;
  sage::SageOptions opts;
  opts.neighbor_sample_cap = cfg.neighbor_sample_cap;
  return sage::train_classifier(g, compute_features(g), labeled, hyper, opts);
}

GraphEstimate estimate_graph(const Graph& g, const sage::ModelParams& model, const ExperimentConfig& cfg) {
  GraphEstimate est;
  est.embeddings = sage::extract_embeddings(g, compute_features(g), model);
  DistanceMatrix z = distance_matrix(est.embeddings);
  if (cfg.normalize_distances) z = normalize_mean(z);
  est.adjacency = learn_graph_map(z, cfg.graph_learning);
  est.sparse = sparsify_to_graph(est.adjacency, cfg.graph_learning.sparsify_ratio);
  return est;
}

Prediction predict_nodes(const Graph& g, const sage::ModelParams& model, const ExperimentConfig& cfg,
                         std::uint64_t seed) {
  const NodeFeatures x = compute_features(g);
  return {sage::predict_classes(g, x, model),
          sage::mc_dropout_predict(g, x, model, cfg.mc_samples, cfg.mc_dropout_rate, seed)};
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
std::vector<T> gather(std::span<const T> all, std::span<const NodeId> nodes) {
  std::vector<T> out;
  out.reserve(nodes.size());
  for (NodeId v : nodes) out.push_back(all[static_cast<std::size_t>(v)]);
  return out;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    if (dir_.empty()) return;
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(out);
    if (!out) throw std::runtime_error("write failed for " + (dir_ / name).string());
  }

  void json(const std::string& name, const nlohmann::json& j) const {
    write(name, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
  }

 private:
  std::filesystem::path dir_;
};

// Runs fn; any exception becomes a StageError naming the stage.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, std::current_exception(), e.what());
  }
}

std::pair<double, double> pass_accuracy(const sage::McPrediction& p, std::span<const NodeId> test,
                                        std::span<const ClassLabel> truth) {
  if (p.pass_predicted.empty() || test.empty()) return {0.0, 0.0};
  std::vector<double> acc;
  for (const auto& pass : p.pass_predicted) {
    std::size_t hit = 0;
    for (NodeId v : test) hit += pass[static_cast<std::size_t>(v)] == truth[static_cast<std::size_t>(v)];
    acc.push_back(static_cast<double>(hit) / static_cast<double>(test.size()));
  }
  double mean = 0.0;
  for (double a : acc) mean += a;
  mean /= static_cast<double>(acc.size());
  if (acc.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double a : acc) ss += (a - mean) * (a - mean);
  return {mean, 1.96 * std::sqrt(ss / static_cast<double>(acc.size() - 1))};
}

void write_embeddings_csv(const Matrix& e, std::ostream& out) {
  out << "node_id";
  for (Eigen::Index c = 0; c < e.cols(); ++c) out << ",e" << c;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < e.rows(); ++i) {
    out << i;
    for (Eigen::Index c = 0; c < e.cols(); ++c) out << ',' << e(i, c);
    out << '\n';
  }
}

std::string noise_tag(double fraction) {
  std::ostringstream s;
  s << std::setprecision(6) << fraction * 100.0;
  return s.str();
}

}  // namespace

EvalReport run_bilgr(const ExperimentConfig& cfg) {
  const Graph g = stage("load graph", [&] {
    cfg.validate();
    return observed_graph(cfg);
  });
  return run_bilgr_on_graph(cfg, g);
}

EvalReport run_bilgr_on_graph(const ExperimentConfig& cfg, const Graph& g, const CriticalityResult* oracle) {
  const ArtifactWriter files(cfg.out_dir);
  try {
    stage("config", [&] { cfg.validate(); });
    const SeedPlan seeds = SeedPlan::from(cfg.seed);

    EvalReport r;
    r.nodes = g.node_count();
    r.edges = g.edge_count();
    r.timings.threads = cfg.threads;
    stage("write graph", [&] { files.write("graph_obs.edges", [&](std::ostream& o) { write_edge_list(g, o); }); });

    // Ground truth for every node; only the train split is shown to the models.
    auto t0 = Clock::now();
    r.oracle = stage("oracle", [&] {
      if (!oracle) return criticality_scores(g, CriticalityOptions{cfg.threads});
      if (oracle->label.size() != g.node_count()) throw ContractError("precomputed oracle does not match the graph");
      return *oracle;
    });
    r.timings.oracle = seconds_since(t0);
    r.truth = r.oracle.label;
    r.warnings.insert(r.warnings.end(), r.oracle.warnings.begin(), r.oracle.warnings.end());
    files.write("criticality.csv", [&](std::ostream& o) { write_criticality_csv(r.oracle, o); });
    if (r.oracle.degenerate && cfg.strict) {
      throw StageError("oracle", std::make_exception_ptr(DegenerateInputError("all nodes have identical criticality")),
                       "all nodes have identical criticality");
    }

    r.split = stage("split", [&] { return split_nodes(g.node_count(), cfg.train_fraction, seeds.split); });
    files.write("split.csv", [&](std::ostream& o) { write_split_csv(r.split, o); });
    const auto labeled = labeled_subset(r.split.train, r.truth);

    t0 = Clock::now();
    const sage::TrainResult obs = stage("train observed", [&] {
      auto res = train_model(g, labeled, cfg, seeds.train_obs);
      if (cfg.strict && !res.warnings.empty()) throw DegenerateInputError(res.warnings.front());
      return res;
    });
    r.timings.train_obs = seconds_since(t0);
    r.obs_epochs = obs.epochs_run;
    r.warnings.insert(r.warnings.end(), obs.warnings.begin(), obs.warnings.end());
    if (!cfg.out_dir.empty()) obs.params.save(cfg.out_dir / "model_obs.json");
    files.write("train_trace_obs.csv", [&](std::ostream& o) { write_loss_trace_csv(obs.loss_trace, o); });

    t0 = Clock::now();
    const GraphEstimate est = stage("graph learning", [&] { return estimate_graph(g, obs.params, cfg); });
    r.timings.graph_learning = seconds_since(t0);
    r.est_edges = est.sparse.graph.edge_count();
    r.est_isolated = est.sparse.isolated;
    r.solver_iterations = est.adjacency.iterations;
    r.solver_objective = est.adjacency.objective;
    r.solver_kkt = est.adjacency.kkt_residual;
    r.solver_converged = est.adjacency.converged;
    for (const auto& w : est.adjacency.warnings) r.warnings.push_back("graph learning: " + w);
    if (est.sparse.isolated > 0) {
      r.warnings.push_back("estimated graph has " + std::to_string(est.sparse.isolated) + " isolated nodes");
    }
    files.write("embeddings_obs.csv", [&](std::ostream& o) { write_embeddings_csv(est.embeddings, o); });
    files.write("solver_trace.csv", [&](std::ostream& o) { write_solver_trace_csv(est.adjacency, o); });
    files.write("graph_est.edges", [&](std::ostream& o) { write_edge_list(est.sparse.graph, o); });

    t0 = Clock::now();
    const sage::TrainResult fresh =
        stage("train estimated", [&] { return train_model(est.sparse.graph, labeled, cfg, seeds.train_est); });
    r.timings.train_est = seconds_since(t0);
    r.est_epochs = fresh.epochs_run;
    if (!cfg.out_dir.empty()) fresh.params.save(cfg.out_dir / "model_est.json");
    files.write("train_trace_est.csv", [&](std::ostream& o) { write_loss_trace_csv(fresh.loss_trace, o); });

    t0 = Clock::now();
    r.prediction = stage("predict", [&] { return predict_nodes(est.sparse.graph, fresh.params, cfg, seeds.mc); });
    r.timings.inference = seconds_since(t0);
    r.warnings.insert(r.warnings.end(), r.prediction.ensemble.warnings.begin(), r.prediction.ensemble.warnings.end());
    files.write("predictions.csv",
                [&](std::ostream& o) { sage::write_prediction_csv(r.prediction.ensemble, o, r.split.test); });

    stage("evaluate", [&] {
      const auto truth = gather<ClassLabel>(r.truth, r.split.test);
      r.observed = evaluate(gather<ClassLabel>(sage::predict_classes(g, compute_features(g), obs.params), r.split.test), truth);
      r.point = evaluate(gather<ClassLabel>(r.prediction.point, r.split.test), truth);
      r.ensemble = evaluate(gather<ClassLabel>(r.prediction.ensemble.predicted, r.split.test), truth);
      std::tie(r.ensemble_accuracy_mean, r.ensemble_accuracy_halfwidth) =
          pass_accuracy(r.prediction.ensemble, r.split.test, r.truth);
    });

    // Noisy test graphs: both trained models stay fixed, only the graph changes.
    t0 = Clock::now();
    for (std::size_t i = 0; i < cfg.noise_fractions.size(); ++i) {
      const double frac = cfg.noise_fractions[i];
      const std::string name = "noise " + noise_tag(frac) + "%";
      NoiseResult nr = stage(name, [&] {
        NoiseResult out;
        out.fraction = frac;
        const NoisyGraph noisy = add_noise_links(g, frac, RngSeed{seeds.noise + i});
        out.links_added = noisy.added;
        const GraphEstimate nest = estimate_graph(noisy.graph, obs.params, cfg);
        const Prediction np = predict_nodes(nest.sparse.graph, fresh.params, cfg, seeds.mc);
        const auto truth = gather<ClassLabel>(r.truth, r.split.test);
        out.point = evaluate(gather<ClassLabel>(np.point, r.split.test), truth);
        out.ensemble = evaluate(gather<ClassLabel>(np.ensemble.predicted, r.split.test), truth);
        out.accuracy_drop = r.ensemble.accuracy - out.ensemble.accuracy;
        files.write("graph_noisy_" + noise_tag(frac) + ".edges",
                    [&](std::ostream& o) { write_edge_list(noisy.graph, o); });
        files.write("predictions_noisy_" + noise_tag(frac) + ".csv",
                    [&](std::ostream& o) { sage::write_prediction_csv(np.ensemble, o, r.split.test); });
        return out;
      });
      r.noise.push_back(std::move(nr));
    }
    r.timings.noise = seconds_since(t0);

    files.json("report.json", report_to_json(r));
    files.json("timings.json", timings_to_json(r.timings));
    return r;
  } catch (const StageError& e) {
    try {
      files.json("error.json", {{"stage", e.stage()}, {"message", e.what()}});
    } catch (...) {
    }
    throw;
  }
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json noise = nlohmann::json::array();
  for (const auto& n : r.noise) {
    noise.push_back({{"fraction", n.fraction},
                     {"links_added", n.links_added},
                     {"point", metrics_to_json(n.point)},
                     {"ensemble", metrics_to_json(n.ensemble)},
                     {"accuracy_drop", n.accuracy_drop}});
  }
  return {
      {"graph", {{"nodes", r.nodes}, {"edges", r.edges}}},
      {"split", {{"train", r.split.train.size()}, {"test", r.split.test.size()}}},
      {"oracle", {{"base_resistance", r.oracle.base_resistance}, {"degenerate", r.oracle.degenerate}}},
      {"accuracy", r.ensemble.accuracy},
      {"class1_recall", r.ensemble.recall[0]},
      {"observed_graph_model", metrics_to_json(r.observed)},
      {"point", metrics_to_json(r.point)},
      {"ensemble", metrics_to_json(r.ensemble)},
      {"ensemble_pass_accuracy", {{"mean", r.ensemble_accuracy_mean}, {"halfwidth", r.ensemble_accuracy_halfwidth}}},
      {"graph_estimate",
       {{"edges", r.est_edges},
        {"isolated", r.est_isolated},
        {"solver_iterations", r.solver_iterations},
        {"objective", r.solver_objective},
        {"kkt_residual", r.solver_kkt},
        {"converged", r.solver_converged}}},
      {"training", {{"observed_epochs", r.obs_epochs}, {"estimated_epochs", r.est_epochs}}},
      {"noise", noise},
      {"warnings", r.warnings},
  };
}

nlohmann::json timings_to_json(const StageTimings& t) {
  return {{"oracle_seconds", t.oracle},           {"train_observed_seconds", t.train_obs},
          {"graph_learning_seconds", t.graph_learning}, {"train_estimated_seconds", t.train_est},
          {"inference_seconds", t.inference},     {"noise_seconds", t.noise},
          {"threads", t.threads}};
}

BenchmarkResult benchmark_speedup(const Graph& g, const sage::ModelParams& model, std::size_t samples,
                                  double rate, std::uint64_t seed, unsigned threads) {
  BenchmarkResult b;
  b.threads = threads;
  auto t0 = Clock::now();
  (void)criticality_scores(g, CriticalityOptions{threads});
  b.oracle_seconds = seconds_since(t0);
  t0 = Clock::now();
  (void)sage::mc_dropout_predict(g, compute_features(g), model, samples, rate, seed);
  b.inference_seconds = seconds_since(t0);
  b.ratio = b.inference_seconds > 0.0 ? b.oracle_seconds / b.inference_seconds
                                      : std::numeric_limits<double>::infinity();
  return b;
}

void write_split_csv(const NodeSplit& s, std::ostream& out) {
  out << "node_id,set\n";
  std::vector<std::pair<NodeId, bool>> rows;
  for (NodeId v : s.train) rows.emplace_back(v, true);
  for (NodeId v : s.test) rows.emplace_back(v, false);
  std::sort(rows.begin(), rows.end());
  for (const auto& [v, train] : rows) out << v << ',' << (train ? "train" : "test") << '\n';
}

NodeSplit read_split_csv(std::istream& in) {
  NodeSplit s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 2) throw ParseError("expected node_id,set", line_no);
    const auto v = detail::parse_field<NodeId>(f[0], line_no, "node id");
    if (f[1] == "train") {
      s.train.push_back(v);
    } else if (f[1] == "test") {
      s.test.push_back(v);
    } else {
      throw ParseError("set must be train or test", line_no);
    }
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void write_loss_trace_csv(const std::vector<double>& trace, std::ostream& out) {
  out << "epoch,loss\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

}  // namespace bilgr
