#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilgr/graph.hpp"
#include "bilgr/nn.hpp"
#include "bilgr/robustness.hpp"

namespace bilgr::sage {

struct Architecture {
  std::vector<std::size_t> aggregation_dims{64, 32, 16};  // one entry per hop, K = 3
  std::size_t hidden_dim = 10;
  std::size_t class_count = 3;
};

/// Layer k maps concat(h_v, mean_{u in N(v)} h_u) to aggregation_dims[k]
/// with relu; the classifier head is dense relu -> dense softmax.
struct ModelParams {
  std::vector<nn::DenseLayer> aggregators;
  nn::DenseLayer hidden;
  nn::DenseLayer output;

  static ModelParams initialize(std::size_t feature_dim, RngSeed seed, const Architecture& arch = {});

  std::size_t feature_dim() const;
  std::size_t embedding_dim() const;
  std::size_t class_count() const;
  std::size_t hidden_layer_count() const { return aggregators.size() + 1; }

  /// Every weight then bias, layer by layer; fixed order used by unflatten().
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> values);
  std::size_t parameter_count() const;

  nlohmann::json to_json() const;
  static ModelParams from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ModelParams load(const std::filesystem::path& path);

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

/// Row-stochastic edge-weighted neighbor averaging, stored as CSR.
/// Isolated nodes get a zero row. With sample_cap > 0, nodes with more
/// neighbors keep a seeded uniform sample of sample_cap of them.
class NeighborMean {
 public:
  explicit NeighborMean(const Graph& g, std::size_t sample_cap = 0, std::uint64_t seed = 0);

  Matrix apply(const Matrix& h) const;            // P h
  Matrix apply_transpose(const Matrix& g) const;  // P^T g
  std::size_t node_count() const { return offsets_.size() - 1; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> cols_;
  std::vector<double> weights_;
};

/// One mask per hidden layer (the K aggregation layers and the head's relu layer).
struct DropoutSet {
  std::vector<nn::DropoutMask> masks;

  static DropoutSet sample(std::size_t node_count, const ModelParams& params, double rate, std::uint64_t seed);
};

struct ForwardResult {
  Matrix logits;         // N x classes
  Matrix probabilities;  // row-wise softmax of logits
  Matrix embeddings;     // N x embedding_dim, output of the last aggregation layer
};

ForwardResult sage_forward(const Graph& g, const NodeFeatures& x, const ModelParams& params,
                           const DropoutSet* dropout = nullptr);
ForwardResult sage_forward(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params,
                           const DropoutSet* dropout = nullptr);

struct LabeledNode {
  NodeId node;
  ClassLabel label;  // 1..3
};

struct LossAndGradient {
  double loss = 0.0;
  ModelParams gradient;  // same shapes as the parameters
  bool clamped = false;
};

/// Mean class-weighted cross entropy over `labeled`, with exact gradients.
LossAndGradient loss_and_gradient(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params,
                                  std::span<const LabeledNode> labeled, std::span<const double> class_weights,
                                  const DropoutSet* dropout = nullptr);

struct SageOptions {
  Architecture architecture;
  std::size_t neighbor_sample_cap = 0;  // 0 = full neighborhood
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_trace;  // one entry per epoch run
  int epochs_run = 0;
  std::vector<std::string> warnings;
};

TrainResult train_classifier(const Graph& g, const NodeFeatures& x, std::span<const LabeledNode> labeled,
                             const nn::TrainHyperparams& hyper, const SageOptions& options = {});

/// Deterministic (dropout off) output of the last aggregation layer.
Matrix extract_embeddings(const Graph& g, const NodeFeatures& x, const ModelParams& params);

/// Argmax of the deterministic forward pass, as labels 1..3.
std::vector<ClassLabel> predict_classes(const Graph& g, const NodeFeatures& x, const ModelParams& params);

struct McPrediction {
  Matrix mean;    // N x classes, average of the S softmax outputs
  Matrix stddev;  // N x classes, sample standard deviation (0 when S == 1)
  std::vector<ClassLabel> predicted;  // argmax of mean
  std::vector<double> predicted_std;  // stddev of the predicted class probability
  std::vector<double> ci_halfwidth;   // 1.96 * predicted_std
  std::vector<std::vector<ClassLabel>> pass_predicted;  // argmax of each pass, S x N
  std::size_t samples = 0;
  std::vector<std::string> warnings;
};

/// S stochastic passes, pass s using masks seeded by seed + s.
McPrediction mc_dropout_predict(const Graph& g, const NodeFeatures& x, const ModelParams& params,
                                std::size_t samples, double rate, std::uint64_t seed);

/// CSV: node_id,p1_mean,p2_mean,p3_mean,p_pred_std,pred_class,ci_halfwidth.
/// Writes the listed nodes, or all nodes when `nodes` is empty.
void write_prediction_csv(const McPrediction& p, std::ostream& out, std::span<const NodeId> nodes = {});

struct PredictionRow {
  NodeId node;
  std::array<double, 3> mean;
  double predicted_std;
  ClassLabel predicted;
  double ci_halfwidth;
};
std::vector<PredictionRow> read_prediction_csv(std::istream& in);

}  // namespace bilgr::sage
