#include "sghormer/graph/graph.hpp"

#include "sghormer/errors.hpp"

namespace sghormer::graph {

void Graph::validate(const std::string& name) const {
  if (node_feats.size() != num_nodes * node_dim) {
    throw ValidationError(name + ": node_feats holds " + std::to_string(node_feats.size()) + " values, expected " +
                          std::to_string(num_nodes) + "x" + std::to_string(node_dim));
  }
  if (edge_feats.size() != edges.size() * edge_dim) {
    throw ValidationError(name + ": edge_feats rows do not match the " + std::to_string(edges.size()) + " edges");
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::uint32_t endpoint : edges[e]) {
      if (endpoint >= num_nodes) {
        throw ValidationError(name + ": edge " + std::to_string(e) + " [" + std::to_string(edges[e][0]) + "," +
                              std::to_string(edges[e][1]) + "] references node " + std::to_string(endpoint) +
                              " but num_nodes is " + std::to_string(num_nodes));
      }
    }
  }
  if (const auto* nodes = std::get_if<std::vector<std::int64_t>>(&label)) {
    if (nodes->size() != num_nodes) {
      throw ValidationError(name + ": node label vector has " + std::to_string(nodes->size()) + " entries for " +
                            std::to_string(num_nodes) + " nodes");
    }
  }
}

namespace {

void append_batch(GraphBatch& out, const Graph& g, std::size_t index) {
  const auto base = static_cast<std::uint32_t>(out.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes; ++i) out.graph_id.push_back(static_cast<std::uint32_t>(index));
  for (const auto& e : g.edges) {
    out.src.push_back(base + e[0]);
    out.dst.push_back(base + e[1]);
  }
  out.node_feats.insert(out.node_feats.end(), g.node_feats.begin(), g.node_feats.end());
  out.edge_feats.insert(out.edge_feats.end(), g.edge_feats.begin(), g.edge_feats.end());
  out.labels.push_back(g.label);
  out.layout.offsets.push_back(out.layout.offsets.back() + g.num_nodes);
  out.edge_offsets.push_back(out.src.size());
}

}  // namespace

GraphBatch batch(std::span<const Graph> graphs) {
  if (graphs.empty()) throw ContractError("batch: need at least one graph");
  GraphBatch out;
  out.node_dim = graphs[0].node_dim;
  out.edge_dim = graphs[0].edge_dim;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Graph& g = graphs[i];
    if (g.node_dim != out.node_dim || g.edge_dim != out.edge_dim) {
      throw ValidationError("batch: graph " + std::to_string(i) + " has feature widths (" +
                            std::to_string(g.node_dim) + "," + std::to_string(g.edge_dim) + "), expected (" +
                            std::to_string(out.node_dim) + "," + std::to_string(out.edge_dim) + ")");
    }
    g.validate("graph " + std::to_string(i));
    append_batch(out, g, i);
  }
  return out;
}

GraphBatch batch(std::span<const Graph> graphs, std::span<const Encodings> encodings) {
  if (encodings.size() != graphs.size()) {
    throw ValidationError("batch: " + std::to_string(encodings.size()) + " encodings for " +
                          std::to_string(graphs.size()) + " graphs");
  }
  GraphBatch out = batch(graphs);
  out.lap_dim = encodings[0].lap_dim;
  out.rw_dim = encodings[0].rw_dim;
  for (std::size_t i = 0; i < encodings.size(); ++i) {
    const Encodings& e = encodings[i];
    if (e.lap_dim != out.lap_dim || e.rw_dim != out.rw_dim || e.num_nodes != graphs[i].num_nodes) {
      throw ValidationError("batch: encodings of graph " + std::to_string(i) + " do not match");
    }
    out.lap_pe.insert(out.lap_pe.end(), e.lap_pe.begin(), e.lap_pe.end());
    out.rwse.insert(out.rwse.end(), e.rwse.begin(), e.rwse.end());
  }
  return out;
}

std::vector<Graph> unbatch(const GraphBatch& b) {
  std::vector<Graph> graphs(b.num_graphs());
  for (std::size_t g = 0; g < b.num_graphs(); ++g) {
    Graph& out = graphs[g];
    const std::size_t n0 = b.layout.offsets[g], n1 = b.layout.offsets[g + 1];
    const std::size_t e0 = b.edge_offsets[g], e1 = b.edge_offsets[g + 1];
    out.num_nodes = n1 - n0;
    out.node_dim = b.node_dim;
    out.edge_dim = b.edge_dim;
    out.node_feats.assign(b.node_feats.begin() + static_cast<std::ptrdiff_t>(n0 * b.node_dim),
                          b.node_feats.begin() + static_cast<std::ptrdiff_t>(n1 * b.node_dim));
    for (std::size_t e = e0; e < e1; ++e) {
      out.edges.push_back({static_cast<std::uint32_t>(b.src[e] - n0), static_cast<std::uint32_t>(b.dst[e] - n0)});
    }
    out.edge_feats.assign(b.edge_feats.begin() + static_cast<std::ptrdiff_t>(e0 * b.edge_dim),
                          b.edge_feats.begin() + static_cast<std::ptrdiff_t>(e1 * b.edge_dim));
    out.label = b.labels[g];
  }
  return graphs;
}

}  // namespace sghormer::graph
