#pragma once

#include <cstdint>
#include <string>

#include "sghormer/graph/graph.hpp"

namespace sghormer::graph {

enum class SyntheticKind { degree_regression, triangle_count, two_community };

SyntheticKind synthetic_kind_from_string(const std::string& name);  // throws ConfigError
std::string to_string(SyntheticKind kind);

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::degree_regression;
  std::size_t num_graphs = 100;
  std::size_t min_nodes = 10;
  std::size_t max_nodes = 20;
  std::uint64_t seed = 0;
};

// Parses "kind:n:seed" as used by --synthetic.
SyntheticSpec parse_synthetic_spec(const std::string& text);

// Random undirected graphs stored with both edge directions and 4 standard
// normal features per node.
//   degree_regression: G(n, 0.3), label = mean degree
//   triangle_count:    G(n, 0.3), label = number of triangles
//   two_community:     planted partition (p_in 0.5, p_out 0.1), node labels = block
// Identical specs give identical datasets.
Dataset gen_synthetic(const SyntheticSpec& spec);

double mean_degree(const Graph& g);
std::size_t count_triangles(const Graph& g);

}  // namespace sghormer::graph
