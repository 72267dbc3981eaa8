#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilgr/graph.hpp"
#include "bilgr/rng.hpp"

namespace bilgr::nn {

enum class Activation { Identity, Relu, Softmax };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weight.rows()); }

  /// Glorot-uniform weights, zero bias.
  static DenseLayer glorot(std::size_t in, std::size_t out, Activation act, Rng& rng);
};

struct DenseOutput {
  Vector output;
  Vector pre_activation;
};

DenseOutput dense_forward(const DenseLayer& layer, const Vector& input);

/// Row-wise batch version: each row of `input` is one sample.
/// Writes W x + b per row into *pre_activation when given.
Matrix dense_forward_rows(const DenseLayer& layer, const Matrix& input, Matrix* pre_activation = nullptr);

Vector relu(const Vector& x);
Vector softmax(const Vector& logits);
void relu_inplace(Matrix& m);
void softmax_rows_inplace(Matrix& m);

struct CrossEntropy {
  double loss = 0.0;
  Vector grad_logits;    // d loss / d logits, for a softmax output layer
  bool clamped = false;  // p_c fell below kProbabilityFloor
};

inline constexpr double kProbabilityFloor = 1e-12;

/// loss = -w_c log p_c, gradient w_c (p - onehot_c). `true_class` is a
/// zero-based index into probs and class_weights.
CrossEntropy weighted_cross_entropy(const Vector& probs, std::size_t true_class,
                                    std::span<const double> class_weights);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moments for one parameter block.
struct AdamState {
  Matrix first;
  Matrix second;
  std::int64_t step = 0;

  static AdamState like(const Eigen::Ref<const Matrix>& param);
};

/// Bias-corrected ADAM update. Throws NumericError naming `block` and the
/// offending entry if grad has a non-finite value; param is untouched then.
void adam_step(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad, AdamState& state,
               const AdamConfig& cfg, const std::string& block = "param");

struct TrainHyperparams {
  AdamConfig adam;
  int epochs = 300;
  std::array<double, 3> class_weights{100.0, 50.0, 1.0};
  double dropout_rate = 0.5;
  // Early stop once the best training loss has not improved by a relative
  // min_improvement for `patience` epochs.
  int patience = 50;
  double min_improvement = 1e-4;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Inverted-dropout mask: entries are 0 (dropped) or 1/(1-rate) (kept).
struct DropoutMask {
  Matrix scale;
  double rate = 0.0;
  std::uint64_t seed = 0;

  static DropoutMask sample(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed);
};

Matrix apply_dropout(const Matrix& x, const DropoutMask& mask);

struct GradientCheckOptions {
  double step = 1e-5;
  // Denominator floor for the relative error, so gradients that are exactly
  // zero compare in absolute terms.
  double absolute_floor = 1e-4;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences of `loss` around `params` against `analytic`.
GradientCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> params, std::span<const double> analytic,
                                   const GradientCheckOptions& options = {});

nlohmann::json layer_to_json(const DenseLayer& layer);
DenseLayer layer_from_json(const nlohmann::json& j);

}  // namespace bilgr::nn
