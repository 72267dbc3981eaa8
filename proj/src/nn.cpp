#include "bilgr/nn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bilgr/error.hpp"

namespace bilgr::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Softmax: return "softmax";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "softmax") return Activation::Softmax;
  throw ParseError("unknown activation '" + s + "'");
}

DenseLayer DenseLayer::glorot(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer{Matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
                   Vector::Zero(static_cast<Eigen::Index>(out)), act};
  for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      layer.weight(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    }
  }
  return layer;
}

Vector relu(const Vector& x) { return x.cwiseMax(0.0); }

Vector softmax(const Vector& logits) {
  if (logits.size() == 0) return logits;
  Vector e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

void relu_inplace(Matrix& m) { m = m.cwiseMax(0.0); }

void softmax_rows_inplace(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
}

namespace {

void check_layer(const DenseLayer& layer) {
  if (layer.bias.size() != layer.weight.rows()) {
    throw ContractError("dense layer bias length " + std::to_string(layer.bias.size()) +
                        " does not match " + std::to_string(layer.weight.rows()) + " outputs");
  }
}

}  // namespace

DenseOutput dense_forward(const DenseLayer& layer, const Vector& input) {
  check_layer(layer);
  if (input.size() != layer.weight.cols()) {
    throw ContractError("dense layer expects input of length " + std::to_string(layer.weight.cols()) +
                        ", got " + std::to_string(input.size()));
  }
  DenseOutput out;
  out.pre_activation = layer.weight * input + layer.bias;
  switch (layer.activation) {
    case Activation::Identity: out.output = out.pre_activation; break;
    case Activation::Relu: out.output = relu(out.pre_activation); break;
    case Activation::Softmax: out.output = softmax(out.pre_activation); break;
  }
  return out;
}

Matrix dense_forward_rows(const DenseLayer& layer, const Matrix& input, Matrix* pre_activation) {
  check_layer(layer);
  if (input.cols() != layer.weight.cols()) {
    throw ContractError("dense layer expects " + std::to_string(layer.weight.cols()) +
                        " input columns, got " + std::to_string(input.cols()));
  }
  Matrix z = input * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  if (pre_activation) *pre_activation = z;
  switch (layer.activation) {
    case Activation::Identity: break;
    case Activation::Relu: relu_inplace(z); break;
    case Activation::Softmax: softmax_rows_inplace(z); break;
  }
  return z;
}

CrossEntropy weighted_cross_entropy(const Vector& probs, std::size_t true_class,
                                    std::span<const double> class_weights) {
  const auto k = static_cast<std::size_t>(probs.size());
  if (true_class >= k || class_weights.size() != k) {
    throw ContractError("cross entropy: class index or weight count does not match " +
                        std::to_string(k) + " classes");
  }
  const auto c = static_cast<Eigen::Index>(true_class);
  const double w = class_weights[true_class];
  CrossEntropy ce;
  double pc = probs[c];
  if (pc < kProbabilityFloor) {
    pc = kProbabilityFloor;
    ce.clamped = true;
  }
  ce.loss = -w * std::log(pc);
  ce.grad_logits = w * probs;
  ce.grad_logits[c] -= w;
  return ce;
}

AdamState AdamState::like(const Eigen::Ref<const Matrix>& param) {
  return {Matrix::Zero(param.rows(), param.cols()), Matrix::Zero(param.rows(), param.cols()), 0};
}

void adam_step(Eigen::Ref<Matrix> param, const Eigen::Ref<const Matrix>& grad, AdamState& state,
               const AdamConfig& cfg, const std::string& block) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols() || state.first.rows() != param.rows() ||
      state.first.cols() != param.cols()) {
    throw ContractError("adam_step: shape mismatch in " + block);
  }
  for (Eigen::Index j = 0; j < grad.cols(); ++j) {
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
      if (!std::isfinite(grad(i, j))) {
        std::ostringstream msg;
        msg << "non-finite gradient in " << block << " at (" << i << ", " << j << "): " << grad(i, j)
            << " after " << state.step << " steps";
        throw NumericError(msg.str());
      }
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.first = cfg.beta1 * state.first + (1.0 - cfg.beta1) * grad;
  state.second = cfg.beta2 * state.second + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  param.array() -= cfg.learning_rate * (state.first.array() / c1) /
                   ((state.second.array() / c2).sqrt() + cfg.epsilon);
}

void TrainHyperparams::validate() const {
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ParameterError("class weights must be positive");
  }
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (!(adam.learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
}

DropoutMask DropoutMask::sample(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  DropoutMask mask{Matrix::Ones(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)), rate, seed};
  if (rate == 0.0) return mask;
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.scale.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.scale.cols(); ++j) {
      mask.scale(i, j) = rng.uniform() < rate ? 0.0 : keep_scale;
    }
  }
  return mask;
}

Matrix apply_dropout(const Matrix& x, const DropoutMask& mask) {
  if (x.rows() != mask.scale.rows() || x.cols() != mask.scale.cols()) {
    throw ContractError("dropout mask shape does not match activations");
  }
  return x.cwiseProduct(mask.scale);
}

GradientCheckReport gradient_check(const std::function<double(std::span<const double>)>& loss,
                                   std::span<const double> params, std::span<const double> analytic,
                                   const GradientCheckOptions& options) {
  if (params.size() != analytic.size()) throw ContractError("gradient_check: length mismatch");
  std::vector<double> x(params.begin(), params.end());
  GradientCheckReport report;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + options.step;
    const double up = loss(x);
    x[i] = orig - options.step;
    const double down = loss(x);
    x[i] = orig;
    const double numeric = (up - down) / (2.0 * options.step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.absolute_floor});
    const double err = std::abs(analytic[i] - numeric) / denom;
    if (err > report.max_relative_error || i == 0) {
      report = {err, i, analytic[i], numeric};
    }
  }
  return report;
}

nlohmann::json layer_to_json(const DenseLayer& layer) {
  std::vector<double> w(layer.weight.size());
  // row-major
  for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
      w[static_cast<std::size_t>(i * layer.weight.cols() + j)] = layer.weight(i, j);
    }
  }
  return {{"activation", to_string(layer.activation)},
          {"rows", layer.weight.rows()},
          {"cols", layer.weight.cols()},
          {"weight", w},
          {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())}};
}

DenseLayer layer_from_json(const nlohmann::json& j) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto w = j.at("weight").get<std::vector<double>>();
    const auto b = j.at("bias").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || w.size() != static_cast<std::size_t>(rows * cols) ||
        b.size() != static_cast<std::size_t>(rows)) {
      throw ParseError("layer shape does not match stored values");
    }
    DenseLayer layer{Matrix(rows, cols), Vector(rows), activation_from_string(j.at("activation").get<std::string>())};
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index c = 0; c < cols; ++c) layer.weight(i, c) = w[static_cast<std::size_t>(i * cols + c)];
      layer.bias[i] = b[static_cast<std::size_t>(i)];
    }
    return layer;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad layer JSON: ") + e.what());
  }
}

}  // namespace bilgr::nn
