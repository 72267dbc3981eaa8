#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilgr/config.hpp"
#include "bilgr/graph.hpp"
#include "bilgr/graph_learning.hpp"
#include "bilgr/graphsage.hpp"
#include "bilgr/metrics.hpp"
#include "bilgr/robustness.hpp"

namespace bilgr {

/// A pipeline stage failed. cause() is the original exception.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::exception_ptr cause, const std::string& message)
      : std::runtime_error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const noexcept { return stage_; }
  std::exception_ptr cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  std::exception_ptr cause_;
};

/// Independent seeds for each random stage, all derived from one master seed.
/// The generator uses the master seed itself.
struct SeedPlan {
  std::uint64_t graph;
  std::uint64_t split;
  std::uint64_t train_obs;
  std::uint64_t train_est;
  std::uint64_t mc;
  std::uint64_t noise;

  static SeedPlan from(std::uint64_t master);
};

Graph observed_graph(const ExperimentConfig& cfg);

std::vector<sage::LabeledNode> labeled_subset(std::span<const NodeId> nodes, std::span<const ClassLabel> labels);

/// Features are computed on g; only `labeled` enters the loss.
sage::TrainResult train_model(const Graph& g, std::span<const sage::LabeledNode> labeled,
                              const ExperimentConfig& cfg, std::uint64_t seed);

struct GraphEstimate {
  Matrix embeddings;
  LearnedAdjacency adjacency;
  SparsifiedGraph sparse;
};

/// Embeds g with the fixed model, builds the distance matrix and solves for
/// the MAP adjacency, then sparsifies it into a graph.
GraphEstimate estimate_graph(const Graph& g, const sage::ModelParams& model, const ExperimentConfig& cfg);

struct Prediction {
  std::vector<ClassLabel> point;  // dropout off, all nodes
  sage::McPrediction ensemble;    // all nodes
};

Prediction predict_nodes(const Graph& g, const sage::ModelParams& model, const ExperimentConfig& cfg,
                         std::uint64_t seed);

struct NoiseResult {
  double fraction = 0.0;
  std::size_t links_added = 0;
  ClassificationMetrics point;
  ClassificationMetrics ensemble;
  double accuracy_drop = 0.0;  // clean ensemble accuracy minus noisy ensemble accuracy
};

struct StageTimings {
  double oracle = 0.0;
  double train_obs = 0.0;
  double graph_learning = 0.0;
  double train_est = 0.0;
  double inference = 0.0;  // one MC-dropout prediction over every node
  double noise = 0.0;
  unsigned threads = 1;
};

struct EvalReport {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  NodeSplit split;
  CriticalityResult oracle;
  std::vector<ClassLabel> truth;  // oracle labels, all nodes

  ClassificationMetrics observed;  // test nodes, observed-graph model, dropout off
  ClassificationMetrics point;     // test nodes
  ClassificationMetrics ensemble;  // test nodes
  double ensemble_accuracy_mean = 0.0;       // mean of per-pass test accuracy
  double ensemble_accuracy_halfwidth = 0.0;  // 1.96 * std of per-pass test accuracy

  Prediction prediction;
  std::size_t est_edges = 0;
  std::size_t est_isolated = 0;
  int solver_iterations = 0;
  double solver_objective = 0.0;
  double solver_kkt = 0.0;
  bool solver_converged = false;
  int obs_epochs = 0;
  int est_epochs = 0;

  std::vector<NoiseResult> noise;
  std::vector<std::string> warnings;
  StageTimings timings;
};

/// Everything except wall-clock timings, so identical configs give identical JSON.
nlohmann::json report_to_json(const EvalReport& r);
nlohmann::json timings_to_json(const StageTimings& t);

/// Runs the whole method. With a non-empty cfg.out_dir every artifact is
/// written there as soon as its stage finishes; on failure error.json names
/// the stage. Throws StageError.
EvalReport run_bilgr(const ExperimentConfig& cfg);
/// `oracle`, when given, must be criticality_scores(g); it is used instead of recomputing.
EvalReport run_bilgr_on_graph(const ExperimentConfig& cfg, const Graph& g, const CriticalityResult* oracle = nullptr);

struct BenchmarkResult {
  double oracle_seconds = 0.0;
  double inference_seconds = 0.0;
  double ratio = 0.0;
  unsigned threads = 1;
};

/// Times the exhaustive oracle against one MC-dropout prediction over all
/// nodes, both with the same thread budget.
BenchmarkResult benchmark_speedup(const Graph& g, const sage::ModelParams& model, std::size_t samples,
                                  double rate, std::uint64_t seed, unsigned threads);

/// CSV "node_id,set" with set = train|test.
void write_split_csv(const NodeSplit& s, std::ostream& out);
NodeSplit read_split_csv(std::istream& in);

void write_loss_trace_csv(const std::vector<double>& trace, std::ostream& out);

}  // namespace bilgr
