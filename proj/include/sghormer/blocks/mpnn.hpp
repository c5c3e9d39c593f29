#pragma once

#include <cstdint>
#include <span>

#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/layers.hpp"

namespace sghormer::blocks {

// Plain message passing on spikes:
//   h_i = x_i + sum over edges (j -> i) of (x_j · w + e_ji · w_e)
// Edges are taken as stored (directed), so node i sums its in-neighbors.
class MessagePassing {
 public:
  MessagePassing() = default;
  MessagePassing(std::size_t d, std::size_t edge_dim, std::mt19937_64& rng);

  // s: stacked [T·N×d]; edge_feats: [|E|×edge_dim] or undefined when edge_dim is 0.
  Tensor forward(const Tensor& s, std::size_t steps, std::span<const std::uint32_t> src,
                 std::span<const std::uint32_t> dst, const Tensor& edge_feats, const Context& ctx) const;

  Tensor& weight() { return w_; }
  const Tensor& weight() const { return w_; }
  std::size_t edge_dim() const { return edge_dim_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Tensor w_;
  std::size_t edge_dim_ = 0;
  Linear edge_proj_;
};

}  // namespace sghormer::blocks
