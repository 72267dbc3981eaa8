#include "bilgr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bilgr/error.hpp"
#include "bilgr/rng.hpp"

namespace bilgr {

NodeSplit split_nodes(std::size_t node_count, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ParameterError("train fraction must lie in (0, 1)");
  std::vector<NodeId> order(node_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = node_count; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(node_count)));
  if (node_count >= 2) n_train = std::clamp<std::size_t>(n_train, 1, node_count - 1);
  NodeSplit s{{order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)},
              {order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end()}};
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

ClassificationMetrics evaluate(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth) {
  if (predicted.size() != truth.size()) throw DomainError("prediction and truth lengths differ");
  ClassificationMetrics m;
  m.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const ClassLabel t = truth[i], p = predicted[i];
    if (t < 1 || t > kClassCount || p < 1 || p > kClassCount) {
      throw DomainError("class label outside {1, 2, 3} at position " + std::to_string(i));
    }
    ++m.confusion[t - 1][p - 1];
  }
  std::size_t correct = 0;
  for (int c = 0; c < kClassCount; ++c) {
    correct += m.confusion[c][c];
    std::size_t predicted_c = 0;
    for (int t = 0; t < kClassCount; ++t) predicted_c += m.confusion[t][c];
    m.support[c] = std::accumulate(m.confusion[c].begin(), m.confusion[c].end(), std::size_t{0});

    if (predicted_c == 0) {
      m.precision_undefined[c] = true;
    } else {
      m.precision[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(predicted_c);
    }
    if (m.support[c] == 0) {
      m.recall_undefined[c] = true;
    } else {
      m.recall[c] = static_cast<double>(m.confusion[c][c]) / static_cast<double>(m.support[c]);
    }
  }
  m.accuracy = m.total ? static_cast<double>(correct) / static_cast<double>(m.total) : 0.0;
  return m;
}

nlohmann::json metrics_to_json(const ClassificationMetrics& m) {
  nlohmann::json classes = nlohmann::json::array();
  for (int c = 0; c < kClassCount; ++c) {
    classes.push_back({{"class", c + 1},
                       {"support", m.support[c]},
                       {"precision", m.precision[c]},
                       {"recall", m.recall[c]},
                       {"precision_undefined", m.precision_undefined[c]},
                       {"recall_undefined", m.recall_undefined[c]}});
  }
  return {{"total", m.total},
          {"accuracy", m.accuracy},
          {"class1_recall", m.recall[0]},
          {"per_class", std::move(classes)},
          {"confusion", m.confusion}};
}

}  // namespace bilgr
