#pragma once

#include <filesystem>
#include <iosfwd>

#include "json.hpp"

#include "bilgr/graph.hpp"

namespace bilgr {

// Edge-list text format:
//
//   #nodes N
//   u v w
//   ...
//
// One undirected edge per line, whitespace separated, weights written with
// round-trip precision. Blank lines are ignored.

void write_edge_list(const Graph& g, std::ostream& out);
Graph read_edge_list(std::istream& in);

void save_edge_list(const Graph& g, const std::filesystem::path& path);
Graph load_edge_list(const std::filesystem::path& path);

/// {"nodes": N, "edges": [[u, v, w], ...]}
nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

}  // namespace bilgr
