#include "bilgr/graphsage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "bilgr/error.hpp"
#include "text_util.hpp"

namespace bilgr::sage {

namespace {

constexpr const char* kCheckpointFormat = "bilgr-graphsage";
constexpr int kCheckpointVersion = 1;

std::vector<const nn::DenseLayer*> layers_of(const ModelParams& p) {
  std::vector<const nn::DenseLayer*> out;
  for (const auto& l : p.aggregators) out.push_back(&l);
  out.push_back(&p.hidden);
  out.push_back(&p.output);
  return out;
}

std::vector<nn::DenseLayer*> layers_of(ModelParams& p) {
  std::vector<nn::DenseLayer*> out;
  for (auto& l : p.aggregators) out.push_back(&l);
  out.push_back(&p.hidden);
  out.push_back(&p.output);
  return out;
}

}  // namespace

ModelParams ModelParams::initialize(std::size_t feature_dim, RngSeed seed, const Architecture& arch) {
  if (arch.aggregation_dims.empty()) throw ParameterError("need at least one aggregation layer");
  Rng rng(seed);
  ModelParams p;
  std::size_t in = feature_dim;
  for (std::size_t out : arch.aggregation_dims) {
    p.aggregators.push_back(nn::DenseLayer::glorot(2 * in, out, nn::Activation::Relu, rng));
    in = out;
  }
  p.hidden = nn::DenseLayer::glorot(in, arch.hidden_dim, nn::Activation::Relu, rng);
  p.output = nn::DenseLayer::glorot(arch.hidden_dim, arch.class_count, nn::Activation::Softmax, rng);
  return p;
}

std::size_t ModelParams::feature_dim() const { return aggregators.front().in_dim() / 2; }
std::size_t ModelParams::embedding_dim() const { return aggregators.back().out_dim(); }
std::size_t ModelParams::class_count() const { return output.out_dim(); }

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto* l : layers_of(*this)) n += static_cast<std::size_t>(l->weight.size() + l->bias.size());
  return n;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto* l : layers_of(*this)) {
    out.insert(out.end(), l->weight.data(), l->weight.data() + l->weight.size());
    out.insert(out.end(), l->bias.data(), l->bias.data() + l->bias.size());
  }
  return out;
}

void ModelParams::unflatten(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ContractError("unflatten: wrong parameter count");
  std::size_t pos = 0;
  for (auto* l : layers_of(*this)) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l->weight.size(), l->weight.data());
    pos += static_cast<std::size_t>(l->weight.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l->bias.size(), l->bias.data());
    pos += static_cast<std::size_t>(l->bias.size());
  }
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  auto la = layers_of(a);
  auto lb = layers_of(b);
  if (la.size() != lb.size()) return false;
  for (std::size_t i = 0; i < la.size(); ++i) {
    if (la[i]->activation != lb[i]->activation || la[i]->weight.rows() != lb[i]->weight.rows() ||
        la[i]->weight.cols() != lb[i]->weight.cols() || la[i]->weight != lb[i]->weight ||
        la[i]->bias != lb[i]->bias) {
      return false;
    }
  }
  return true;
}

nlohmann::json ModelParams::to_json() const {
  nlohmann::json agg = nlohmann::json::array();
  for (const auto& l : aggregators) agg.push_back(nn::layer_to_json(l));
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"aggregators", std::move(agg)},
          {"hidden", nn::layer_to_json(hidden)},
          {"output", nn::layer_to_json(output)}};
}

ModelParams ModelParams::from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) throw ParseError("not a GraphSAGE checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + j.at("version").dump());
    }
    ModelParams p;
    for (const auto& l : j.at("aggregators")) p.aggregators.push_back(nn::layer_from_json(l));
    p.hidden = nn::layer_from_json(j.at("hidden"));
    p.output = nn::layer_from_json(j.at("output"));
    if (p.aggregators.empty()) throw ParseError("checkpoint has no aggregation layers");
    std::size_t in = p.aggregators.front().in_dim() / 2;
    for (const auto& l : p.aggregators) {
      if (l.in_dim() != 2 * in) throw ParseError("aggregation layer dimensions do not chain");
      in = l.out_dim();
    }
    if (p.hidden.in_dim() != in || p.output.in_dim() != p.hidden.out_dim()) {
      throw ParseError("classifier head dimensions do not chain");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
}

void ModelParams::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_json().dump(1) << '\n';
}

ModelParams ModelParams::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what());
  }
}

NeighborMean::NeighborMean(const Graph& g, std::size_t sample_cap, std::uint64_t seed) {
  const std::size_t n = g.node_count();
  offsets_.assign(n + 1, 0);
  Rng rng(seed);
  std::vector<Neighbor> picked;
  for (std::size_t v = 0; v < n; ++v) {
    auto nbrs = g.neighbors(static_cast<NodeId>(v));
    picked.assign(nbrs.begin(), nbrs.end());
    if (sample_cap > 0 && picked.size() > sample_cap) {
      for (std::size_t i = 0; i < sample_cap; ++i) {
        std::swap(picked[i], picked[i + rng.below(picked.size() - i)]);
      }
      picked.resize(sample_cap);
      std::sort(picked.begin(), picked.end(), [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
    double total = 0.0;
    for (const Neighbor& nb : picked) total += nb.weight;
    for (const Neighbor& nb : picked) {
      cols_.push_back(nb.node);
      weights_.push_back(nb.weight / total);
    }
    offsets_[v + 1] = cols_.size();
  }
}

Matrix NeighborMean::apply(const Matrix& h) const {
  const std::size_t n = node_count();
  if (static_cast<std::size_t>(h.rows()) != n) throw ContractError("neighbor mean: row count mismatch");
  Matrix out = Matrix::Zero(h.rows(), h.cols());
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    const double* src = h.col(c).data();
    double* dst = out.col(c).data();
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0.0;
      for (std::size_t k = offsets_[v]; k < offsets_[v + 1]; ++k) s += weights_[k] * src[cols_[k]];
      dst[v] = s;
    }
  }
  return out;
}

Matrix NeighborMean::apply_transpose(const Matrix& g) const {
  const std::size_t n = node_count();
  if (static_cast<std::size_t>(g.rows()) != n) throw ContractError("neighbor mean: row count mismatch");
  Matrix out = Matrix::Zero(g.rows(), g.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    const double* src = g.col(c).data();
    double* dst = out.col(c).data();
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t k = offsets_[v]; k < offsets_[v + 1]; ++k) dst[cols_[k]] += weights_[k] * src[v];
    }
  }
  return out;
}

DropoutSet DropoutSet::sample(std::size_t node_count, const ModelParams& params, double rate, std::uint64_t seed) {
  DropoutSet set;
  Rng rng(seed);
  for (const auto& l : params.aggregators) {
    set.masks.push_back(nn::DropoutMask::sample(node_count, l.out_dim(), rate, rng.next()));
  }
  set.masks.push_back(nn::DropoutMask::sample(node_count, params.hidden.out_dim(), rate, rng.next()));
  return set;
}

namespace {

struct Cache {
  std::vector<Matrix> concat;  // input to each aggregation layer
  std::vector<Matrix> pre;     // pre-activations, aggregators then hidden
  Matrix embeddings;
  Matrix hidden_out;
  Matrix logits;
  Matrix probs;
};

void check_inputs(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params,
                  const DropoutSet* dropout) {
  if (x.rows() != agg.node_count()) {
    throw ContractError("feature rows (" + std::to_string(x.rows()) + ") do not match graph nodes (" +
                        std::to_string(agg.node_count()) + ")");
  }
  if (static_cast<std::size_t>(x.values.cols()) != params.feature_dim()) {
    throw ContractError("feature width does not match model input");
  }
  if (dropout && dropout->masks.size() != params.hidden_layer_count()) {
    throw ContractError("dropout set needs one mask per hidden layer");
  }
}

Cache forward(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params, const DropoutSet* dropout) {
  check_inputs(agg, x, params, dropout);
  Cache c;
  Matrix h = x.values;
  for (std::size_t k = 0; k < params.aggregators.size(); ++k) {
    const auto d = h.cols();
    Matrix cat(h.rows(), 2 * d);
    cat.leftCols(d) = h;
    cat.rightCols(d) = agg.apply(h);
    Matrix pre;
    h = nn::dense_forward_rows(params.aggregators[k], cat, &pre);
    if (dropout) h = nn::apply_dropout(h, dropout->masks[k]);
    c.concat.push_back(std::move(cat));
    c.pre.push_back(std::move(pre));
  }
  c.embeddings = h;
  Matrix pre;
  c.hidden_out = nn::dense_forward_rows(params.hidden, c.embeddings, &pre);
  if (dropout) c.hidden_out = nn::apply_dropout(c.hidden_out, dropout->masks.back());
  c.pre.push_back(std::move(pre));

  nn::DenseLayer linear_out = params.output;
  linear_out.activation = nn::Activation::Identity;
  c.logits = nn::dense_forward_rows(linear_out, c.hidden_out);
  c.probs = c.logits;
  nn::softmax_rows_inplace(c.probs);
  return c;
}

// d/dpre of relu(pre) * mask.
Matrix relu_backward(const Matrix& grad_out, const Matrix& pre, const nn::DropoutMask* mask) {
  Matrix g = grad_out.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  if (mask) g = g.cwiseProduct(mask->scale);
  return g;
}

void accumulate_dense(nn::DenseLayer& grad, const Matrix& grad_pre, const Matrix& input) {
  grad.weight = grad_pre.transpose() * input;
  grad.bias = grad_pre.colwise().sum().transpose();
}

}  // namespace

ForwardResult sage_forward(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params,
                           const DropoutSet* dropout) {
  Cache c = forward(agg, x, params, dropout);
  return {std::move(c.logits), std::move(c.probs), std::move(c.embeddings)};
}

ForwardResult sage_forward(const Graph& g, const NodeFeatures& x, const ModelParams& params,
                           const DropoutSet* dropout) {
  return sage_forward(NeighborMean(g), x, params, dropout);
}

LossAndGradient loss_and_gradient(const NeighborMean& agg, const NodeFeatures& x, const ModelParams& params,
                                  std::span<const LabeledNode> labeled, std::span<const double> class_weights,
                                  const DropoutSet* dropout) {
  if (labeled.empty()) throw ParameterError("no labeled nodes");
  if (class_weights.size() != params.class_count()) throw ContractError("one class weight per class required");
  Cache c = forward(agg, x, params, dropout);

  LossAndGradient out;
  out.gradient = params;
  const auto n = c.logits.rows();
  const double inv_count = 1.0 / static_cast<double>(labeled.size());
  Matrix grad_logits = Matrix::Zero(n, c.logits.cols());
  for (const LabeledNode& ln : labeled) {
    if (ln.node < 0 || ln.node >= n) throw IndexError("labeled node out of range");
    if (ln.label < 1 || static_cast<std::size_t>(ln.label) > params.class_count()) {
      throw IndexError("class label out of range");
    }
    const Vector probs = c.probs.row(ln.node).transpose();
    auto ce = nn::weighted_cross_entropy(probs, static_cast<std::size_t>(ln.label - 1), class_weights);
    out.loss += ce.loss * inv_count;
    out.clamped = out.clamped || ce.clamped;
    grad_logits.row(ln.node) += ce.grad_logits.transpose() * inv_count;
  }

  auto& grad = out.gradient;
  accumulate_dense(grad.output, grad_logits, c.hidden_out);
  Matrix grad_h = grad_logits * params.output.weight;

  const std::size_t k_count = params.aggregators.size();
  Matrix grad_pre = relu_backward(grad_h, c.pre[k_count], dropout ? &dropout->masks.back() : nullptr);
  accumulate_dense(grad.hidden, grad_pre, c.embeddings);
  grad_h = grad_pre * params.hidden.weight;

  for (std::size_t k = k_count; k-- > 0;) {
    grad_pre = relu_backward(grad_h, c.pre[k], dropout ? &dropout->masks[k] : nullptr);
    accumulate_dense(grad.aggregators[k], grad_pre, c.concat[k]);
    if (k == 0) break;
    const Matrix grad_cat = grad_pre * params.aggregators[k].weight;
    const auto d = grad_cat.cols() / 2;
    grad_h = grad_cat.leftCols(d) + agg.apply_transpose(grad_cat.rightCols(d));
  }
  return out;
}

TrainResult train_classifier(const Graph& g, const NodeFeatures& x, std::span<const LabeledNode> labeled,
                             const nn::TrainHyperparams& hyper, const SageOptions& options) {
  hyper.validate();
  if (labeled.empty()) throw ParameterError("train_classifier needs at least one labeled node");
  TrainResult result;
  std::set<ClassLabel> classes;
  for (const auto& ln : labeled) classes.insert(ln.label);
  if (classes.size() == 1) {
    result.warnings.push_back("all labeled nodes belong to class " + std::to_string(*classes.begin()));
  }

  const NeighborMean agg(g, options.neighbor_sample_cap, Rng::mix(hyper.seed ^ 0xA66ULL));
  Rng seeds(hyper.seed);
  result.params = ModelParams::initialize(static_cast<std::size_t>(x.values.cols()), RngSeed{seeds.next()},
                                          options.architecture);
  const std::uint64_t dropout_seed = seeds.next();

  std::vector<nn::AdamState> states;
  for (auto* l : layers_of(result.params)) {
    states.push_back(nn::AdamState::like(l->weight));
    states.push_back(nn::AdamState::like(l->bias));
  }

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::optional<DropoutSet> masks;
    if (hyper.dropout_rate > 0.0) {
      masks = DropoutSet::sample(g.node_count(), result.params, hyper.dropout_rate,
                                 dropout_seed + static_cast<std::uint64_t>(epoch));
    }
    auto lg = loss_and_gradient(agg, x, result.params, labeled, hyper.class_weights, masks ? &*masks : nullptr);
    auto params = layers_of(result.params);
    auto grads = layers_of(lg.gradient);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const std::string name = "layer " + std::to_string(i);
      nn::adam_step(params[i]->weight, grads[i]->weight, states[2 * i], hyper.adam, name + " weight");
      nn::adam_step(params[i]->bias, grads[i]->bias, states[2 * i + 1], hyper.adam, name + " bias");
    }
    result.loss_trace.push_back(lg.loss);
    result.epochs_run = epoch + 1;

    if (lg.loss < best * (1.0 - hyper.min_improvement)) {
      best = lg.loss;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }
  return result;
}

Matrix extract_embeddings(const Graph& g, const NodeFeatures& x, const ModelParams& params) {
  return sage_forward(g, x, params).embeddings;
}

namespace {

ClassLabel argmax_label(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return static_cast<ClassLabel>(best + 1);
}

}  // namespace

std::vector<ClassLabel> predict_classes(const Graph& g, const NodeFeatures& x, const ModelParams& params) {
  const Matrix probs = sage_forward(g, x, params).probabilities;
  std::vector<ClassLabel> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) out[static_cast<std::size_t>(i)] = argmax_label(probs.row(i));
  return out;
}

McPrediction mc_dropout_predict(const Graph& g, const NodeFeatures& x, const ModelParams& params,
                                std::size_t samples, double rate, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("MC dropout needs at least one sample");
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
  const NeighborMean agg(g);
  const auto n = static_cast<Eigen::Index>(g.node_count());
  const auto k = static_cast<Eigen::Index>(params.class_count());

  McPrediction p;
  p.samples = samples;
  Matrix sum = Matrix::Zero(n, k);
  Matrix sum_sq = Matrix::Zero(n, k);
  for (std::size_t s = 0; s < samples; ++s) {
    const DropoutSet masks = DropoutSet::sample(g.node_count(), params, rate, seed + s);
    const Matrix probs = sage_forward(agg, x, params, rate > 0.0 ? &masks : nullptr).probabilities;
    sum += probs;
    sum_sq += probs.cwiseProduct(probs);
    auto& labels = p.pass_predicted.emplace_back(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = argmax_label(probs.row(i));
  }
  const double s_count = static_cast<double>(samples);
  p.mean = sum / s_count;
  if (samples > 1) {
    const Matrix var = ((sum_sq - s_count * p.mean.cwiseProduct(p.mean)) / (s_count - 1.0)).cwiseMax(0.0);
    p.stddev = var.cwiseSqrt();
  } else {
    p.stddev = Matrix::Zero(n, k);
    p.warnings.push_back("single MC sample: standard deviations reported as 0");
  }
  if (rate == 0.0) p.stddev.setZero();

  p.predicted.resize(static_cast<std::size_t>(n));
  p.predicted_std.resize(static_cast<std::size_t>(n));
  p.ci_halfwidth.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const ClassLabel c = argmax_label(p.mean.row(i));
    const auto idx = static_cast<std::size_t>(i);
    p.predicted[idx] = c;
    p.predicted_std[idx] = p.stddev(i, c - 1);
    p.ci_halfwidth[idx] = 1.96 * p.predicted_std[idx];
  }
  return p;
}

void write_prediction_csv(const McPrediction& p, std::ostream& out, std::span<const NodeId> nodes) {
  out << "node_id,p1_mean,p2_mean,p3_mean,p_pred_std,pred_class,ci_halfwidth\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto row = [&](NodeId v) {
    out << v;
    for (Eigen::Index c = 0; c < 3; ++c) out << ',' << (c < p.mean.cols() ? p.mean(v, c) : 0.0);
    out << ',' << p.predicted_std[v] << ',' << p.predicted[v] << ',' << p.ci_halfwidth[v] << '\n';
  };
  if (nodes.empty()) {
    for (Eigen::Index v = 0; v < p.mean.rows(); ++v) row(static_cast<NodeId>(v));
  } else {
    for (NodeId v : nodes) row(v);
  }
}

std::vector<PredictionRow> read_prediction_csv(std::istream& in) {
  std::vector<PredictionRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto f = detail::split(line, ',');
    if (header) {
      if (f.size() != 7 || f[0] != "node_id") throw ParseError("expected prediction CSV header", line_no);
      header = false;
      continue;
    }
    if (f.size() != 7) throw ParseError("expected 7 fields", line_no);
    PredictionRow r{};
    r.node = detail::parse_field<NodeId>(f[0], line_no, "node id");
    for (std::size_t c = 0; c < 3; ++c) r.mean[c] = detail::parse_field<double>(f[1 + c], line_no, "probability");
    r.predicted_std = detail::parse_field<double>(f[4], line_no, "p_pred_std");
    r.predicted = detail::parse_field<int>(f[5], line_no, "pred_class");
    r.ci_halfwidth = detail::parse_field<double>(f[6], line_no, "ci_halfwidth");
    if (r.predicted < 1 || r.predicted > kClassCount) throw ParseError("pred_class must be 1, 2 or 3", line_no);
    rows.push_back(r);
  }
  if (header) throw ParseError("empty prediction file");
  return rows;
}

}  // namespace bilgr::sage
