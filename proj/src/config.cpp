#include "bilgr/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "text_util.hpp"

namespace bilgr {

void ExperimentConfig::validate() const {
  try {
    if (graph_file.empty() && (attach_edges < 1 || nodes < attach_edges + 1)) {
      throw ConfigError("need nodes >= attach_edges + 1 >= 2");
    }
    if (!(triad_probability >= 0.0 && triad_probability <= 1.0)) throw ConfigError("triad_probability outside [0, 1]");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    for (double f : noise_fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw ConfigError("noise fractions must lie in (0, 1]");
    }
    if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
    if (!(mc_dropout_rate >= 0.0 && mc_dropout_rate < 1.0)) throw ConfigError("mc_dropout_rate outside [0, 1)");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    train.validate();
    graph_learning.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

namespace {

template <typename T>
T number(const std::string& v) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad number '" + v + "'");
  return out;
}

bool boolean(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean '" + v + "'");
}

std::vector<double> number_list(const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  for (const auto& f : detail::split(v, ',')) out.push_back(number<double>(f));
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"nodes", [](auto& c, auto& v) { c.nodes = number<std::size_t>(v); }},
      {"attach_edges", [](auto& c, auto& v) { c.attach_edges = number<std::size_t>(v); }},
      {"triad_probability", [](auto& c, auto& v) { c.triad_probability = number<double>(v); }},
      {"graph_file", [](auto& c, auto& v) { c.graph_file = v; }},
      {"seed", [](auto& c, auto& v) { c.seed = number<std::uint64_t>(v); }},
      {"train_fraction", [](auto& c, auto& v) { c.train_fraction = number<double>(v); }},
      {"noise_fractions", [](auto& c, auto& v) { c.noise_fractions = number_list(v); }},
      {"learning_rate", [](auto& c, auto& v) { c.train.adam.learning_rate = number<double>(v); }},
      {"adam_beta1", [](auto& c, auto& v) { c.train.adam.beta1 = number<double>(v); }},
      {"adam_beta2", [](auto& c, auto& v) { c.train.adam.beta2 = number<double>(v); }},
      {"adam_epsilon", [](auto& c, auto& v) { c.train.adam.epsilon = number<double>(v); }},
      {"epochs", [](auto& c, auto& v) { c.train.epochs = number<int>(v); }},
      {"patience", [](auto& c, auto& v) { c.train.patience = number<int>(v); }},
      {"min_improvement", [](auto& c, auto& v) { c.train.min_improvement = number<double>(v); }},
      {"class_weights",
       [](auto& c, auto& v) {
         auto w = number_list(v);
         if (w.size() != 3) throw ConfigError("class_weights needs exactly 3 values");
         std::copy(w.begin(), w.end(), c.train.class_weights.begin());
       }},
      {"dropout_rate", [](auto& c, auto& v) { c.train.dropout_rate = number<double>(v); }},
      {"neighbor_sample_cap", [](auto& c, auto& v) { c.neighbor_sample_cap = number<std::size_t>(v); }},
      {"alpha", [](auto& c, auto& v) { c.graph_learning.alpha = number<double>(v); }},
      {"beta", [](auto& c, auto& v) { c.graph_learning.beta = number<double>(v); }},
      {"max_iters", [](auto& c, auto& v) { c.graph_learning.max_iters = number<int>(v); }},
      {"tolerance", [](auto& c, auto& v) { c.graph_learning.tolerance = number<double>(v); }},
      {"kkt_tolerance", [](auto& c, auto& v) { c.graph_learning.kkt_tolerance = number<double>(v); }},
      {"step_size", [](auto& c, auto& v) { c.graph_learning.step_size = number<double>(v); }},
      {"sparsify_ratio", [](auto& c, auto& v) { c.graph_learning.sparsify_ratio = number<double>(v); }},
      {"normalize_distances", [](auto& c, auto& v) { c.normalize_distances = boolean(v); }},
      {"mc_samples", [](auto& c, auto& v) { c.mc_samples = number<std::size_t>(v); }},
      {"mc_dropout_rate", [](auto& c, auto& v) { c.mc_dropout_rate = number<double>(v); }},
      {"threads", [](auto& c, auto& v) { c.threads = number<unsigned>(v); }},
      {"out_dir", [](auto& c, auto& v) { c.out_dir = v; }},
      {"strict", [](auto& c, auto& v) { c.strict = boolean(v); }},
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in, ExperimentConfig cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + " (" + key + "): " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

void write_config(const ExperimentConfig& c, std::ostream& out) {
  auto list = [](auto begin, auto end) {
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (auto it = begin; it != end; ++it) s << (it == begin ? "" : ",") << *it;
    return s.str();
  };
  out << std::setprecision(std::numeric_limits<double>::max_digits10) << std::boolalpha;
  out << "nodes = " << c.nodes << '\n'
      << "attach_edges = " << c.attach_edges << '\n'
      << "triad_probability = " << c.triad_probability << '\n';
  if (!c.graph_file.empty()) out << "graph_file = " << c.graph_file.string() << '\n';
  out << "seed = " << c.seed << '\n'
      << "train_fraction = " << c.train_fraction << '\n'
      << "noise_fractions = " << list(c.noise_fractions.begin(), c.noise_fractions.end()) << '\n'
      << "learning_rate = " << c.train.adam.learning_rate << '\n'
      << "adam_beta1 = " << c.train.adam.beta1 << '\n'
      << "adam_beta2 = " << c.train.adam.beta2 << '\n'
      << "adam_epsilon = " << c.train.adam.epsilon << '\n'
      << "epochs = " << c.train.epochs << '\n'
      << "patience = " << c.train.patience << '\n'
      << "min_improvement = " << c.train.min_improvement << '\n'
      << "class_weights = " << list(c.train.class_weights.begin(), c.train.class_weights.end()) << '\n'
      << "dropout_rate = " << c.train.dropout_rate << '\n'
      << "neighbor_sample_cap = " << c.neighbor_sample_cap << '\n'
      << "alpha = " << c.graph_learning.alpha << '\n'
      << "beta = " << c.graph_learning.beta << '\n'
      << "max_iters = " << c.graph_learning.max_iters << '\n'
      << "tolerance = " << c.graph_learning.tolerance << '\n'
      << "kkt_tolerance = " << c.graph_learning.kkt_tolerance << '\n'
      << "step_size = " << c.graph_learning.step_size << '\n'
      << "sparsify_ratio = " << c.graph_learning.sparsify_ratio << '\n'
      << "normalize_distances = " << c.normalize_distances << '\n'
      << "mc_samples = " << c.mc_samples << '\n'
      << "mc_dropout_rate = " << c.mc_dropout_rate << '\n'
      << "threads = " << c.threads << '\n'
      << "out_dir = " << c.out_dir.string() << '\n'
      << "strict = " << c.strict << '\n';
}

}  // namespace bilgr
