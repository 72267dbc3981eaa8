#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "bilgr/error.hpp"
#include "bilgr/graph_learning.hpp"
#include "bilgr/nn.hpp"

namespace bilgr {

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

struct ExperimentConfig {
  // Observed graph: generated unless graph_file is set.
  std::size_t nodes = 300;
  std::size_t attach_edges = 1;
  double triad_probability = 0.1;
  std::filesystem::path graph_file;
  std::uint64_t seed = 1;

  double train_fraction = 0.6;
  std::vector<double> noise_fractions{0.02, 0.04};

  nn::TrainHyperparams train;
  std::size_t neighbor_sample_cap = 0;

  // On mean-normalized distances a small beta gives a graph a few times
  // denser than G_obs; beta near 1 gives an almost complete one.
  GraphLearnConfig graph_learning{.beta = 5e-6};
  bool normalize_distances = true;

  std::size_t mc_samples = 100;
  double mc_dropout_rate = 0.5;

  unsigned threads = 1;
  std::filesystem::path out_dir = "bilgr_out";
  bool strict = false;

  void validate() const;
};

/// Parses "key = value" lines; '#' starts a comment. Unknown keys and bad
/// values throw ConfigError naming the line.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Writes every key in the format parse_config reads.
void write_config(const ExperimentConfig& cfg, std::ostream& out);

}  // namespace bilgr
