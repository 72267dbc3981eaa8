#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "bilgr/graph.hpp"
#include "bilgr/robustness.hpp"

namespace bilgr {

struct NodeSplit {
  std::vector<NodeId> train;  // ascending
  std::vector<NodeId> test;   // ascending
};

/// Seeded uniform split; round(train_fraction * N) nodes go to train, kept
/// within [1, N-1] when N >= 2.
NodeSplit split_nodes(std::size_t node_count, double train_fraction, std::uint64_t seed);

struct ClassificationMetrics {
  std::size_t total = 0;
  double accuracy = 0.0;
  // confusion[t][p]: true class t+1 predicted as p+1
  std::array<std::array<std::size_t, 3>, 3> confusion{};
  std::array<double, 3> precision{};
  std::array<double, 3> recall{};
  std::array<std::size_t, 3> support{};  // true count per class
  // 0/0 cases are reported as 0 and flagged here
  std::array<bool, 3> precision_undefined{};
  std::array<bool, 3> recall_undefined{};
};

/// DomainError if lengths differ or a label is outside {1, 2, 3}.
ClassificationMetrics evaluate(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth);

nlohmann::json metrics_to_json(const ClassificationMetrics& m);

}  // namespace bilgr
