#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sghormer/autodiff/ops.hpp"

namespace sghormer::graph {

// Regression target, graph class, or one class per node.
using Label = std::variant<std::monostate, double, std::int64_t, std::vector<std::int64_t>>;

using Edge = std::array<std::uint32_t, 2>;  // (src, dst)

struct Graph {
  std::size_t num_nodes = 0;
  std::vector<Edge> edges;
  std::size_t node_dim = 0;
  std::vector<float> node_feats;  // num_nodes × node_dim
  std::size_t edge_dim = 0;
  std::vector<float> edge_feats;  // edges.size() × edge_dim
  Label label;

  // Throws ValidationError naming `name` and the offending edge or field.
  void validate(const std::string& name = "graph") const;

  bool operator==(const Graph&) const = default;
};

using Dataset = std::vector<Graph>;

// Row-major N×k Laplacian eigenvectors and N×K return probabilities.
struct Encodings {
  std::size_t num_nodes = 0;
  std::size_t lap_dim = 0;
  std::vector<float> lap_pe;
  std::size_t rw_dim = 0;
  std::vector<float> rwse;
};

// Disjoint union of graphs. Node i of graph g sits at row layout.offsets[g] + i;
// no edge crosses a block.
struct GraphBatch {
  ad::BlockLayout layout;
  std::vector<std::uint32_t> graph_id;  // per node
  std::vector<std::uint32_t> src;       // global endpoints, per edge
  std::vector<std::uint32_t> dst;
  std::vector<std::size_t> edge_offsets{0};  // per graph, into src/dst
  std::size_t node_dim = 0;
  std::vector<float> node_feats;
  std::size_t edge_dim = 0;
  std::vector<float> edge_feats;
  std::size_t lap_dim = 0;
  std::vector<float> lap_pe;
  std::size_t rw_dim = 0;
  std::vector<float> rwse;
  std::vector<Label> labels;

  std::size_t num_graphs() const { return layout.num_blocks(); }
  std::size_t num_nodes() const { return layout.total_rows(); }
  std::size_t num_edges() const { return src.size(); }
};

GraphBatch batch(std::span<const Graph> graphs);
// Encodings must be index-aligned with graphs and share widths.
GraphBatch batch(std::span<const Graph> graphs, std::span<const Encodings> encodings);
std::vector<Graph> unbatch(const GraphBatch& b);

}  // namespace sghormer::graph
