#include "bilgr/graph_io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bilgr/error.hpp"

namespace bilgr {

void write_edge_list(const Graph& g, std::ostream& out) {
  out << "#nodes " << g.node_count() << '\n';
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << ' ' << e.weight << '\n';
}

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

template <typename T>
bool parse_number(const std::string& tok, T& value) {
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

}  // namespace

Graph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  Graph g;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (!have_header) {
      std::size_t n = 0;
      if (tok.size() != 2 || tok[0] != "#nodes" || !parse_number(tok[1], n)) {
        throw ParseError("expected header '#nodes N'", line_no);
      }
      g = Graph(n);
      have_header = true;
      continue;
    }
    if (tok.size() != 3) {
      throw ParseError("expected 'u v w', got " + std::to_string(tok.size()) + " fields", line_no);
    }
    NodeId u = 0, v = 0;
    double w = 0.0;
    if (!parse_number(tok[0], u) || !parse_number(tok[1], v)) {
      throw ParseError("node ids must be integers", line_no);
    }
    if (!parse_number(tok[2], w)) throw ParseError("weight is not a number", line_no);
    try {
      g.add_edge(u, v, w);
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("missing '#nodes N' header", line_no);
  return g;
}

void save_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_edge_list(g, out);
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_edge_list(in);
}

nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v, e.weight});
  return {{"nodes", g.node_count()}, {"edges", std::move(edges)}};
}

Graph graph_from_json(const nlohmann::json& j) {
  try {
    Graph g(j.at("nodes").get<std::size_t>());
    for (const auto& e : j.at("edges")) {
      g.add_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>(), e.at(2).get<double>());
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad graph JSON: ") + e.what());
  }
}

}  // namespace bilgr
