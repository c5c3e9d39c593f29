#pragma once

#include <filesystem>
#include <string>

#include "sghormer/graph/graph.hpp"

namespace sghormer::graph {

// One graph per line:
//   {"num_nodes": int, "edges": [[src,dst],...], "node_feats": [[f,...],...],
//    "edge_feats": [[f,...],...] (optional), "label": number | int | [int,...] (optional)}
// Blank lines are skipped. Malformed lines raise ParseError with the line
// number; out-of-range edges raise ValidationError naming graph and edge.
Dataset load_jsonl(const std::filesystem::path& path);
void save_jsonl(const std::filesystem::path& path, const Dataset& data);

Graph graph_from_json_line(const std::string& line, std::size_t line_number = 0);
std::string graph_to_json_line(const Graph& g);

}  // namespace sghormer::graph
