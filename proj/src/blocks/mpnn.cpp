#include "sghormer/blocks/mpnn.hpp"

#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

MessagePassing::MessagePassing(std::size_t d, std::size_t edge_dim, std::mt19937_64& rng) : edge_dim_(edge_dim) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> w(d * d);
  for (auto& x : w) x = static_cast<float>(dist(rng));
  w_ = Tensor({d, d}, std::move(w), true);
  if (edge_dim_ > 0) edge_proj_ = Linear(edge_dim_, d, rng, false);
}

Tensor MessagePassing::forward(const Tensor& s, std::size_t steps, std::span<const std::uint32_t> src,
                               std::span<const std::uint32_t> dst, const Tensor& edge_feats,
                               const Context& ctx) const {
  const std::size_t d = w_.rows();
  if (s.rank() != 2 || s.cols() != d || steps == 0 || s.rows() % steps != 0) {
    throw DimensionError("mpnn: input " + ad::shape_str(s.shape()) + " does not fit width " + std::to_string(d));
  }
  if (src.size() != dst.size()) throw DimensionError("mpnn: src and dst lengths differ");
  const std::size_t n = s.rows() / steps, e = src.size();
  for (std::size_t i = 0; i < e; ++i) {
    if (src[i] >= n || dst[i] >= n) {
      throw ValidationError("mpnn: edge " + std::to_string(i) + " references a node outside the batch");
    }
  }
  const bool has_edge_feats = edge_dim_ > 0 && e > 0;
  if (has_edge_feats && (!edge_feats.defined() || edge_feats.rows() != e || edge_feats.cols() != edge_dim_)) {
    throw DimensionError("mpnn: edge features must be " + std::to_string(e) + "x" + std::to_string(edge_dim_));
  }

  for (std::size_t t = 0; ctx.trace && t < steps; ++t) {
    record_op(ctx, t, "mpnn", "message", static_cast<std::uint64_t>(n) * d * d + static_cast<std::uint64_t>(e) * d,
              step_fire_rate(s, steps, t));
  }
  if (e == 0) return s;

  std::vector<std::uint32_t> src_t(steps * e), dst_t(steps * e);
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < e; ++i) {
      src_t[t * e + i] = static_cast<std::uint32_t>(t * n + src[i]);
      dst_t[t * e + i] = static_cast<std::uint32_t>(t * n + dst[i]);
    }
  Tensor messages = ad::gather_rows<float>(ad::matmul(s, w_), src_t);
  if (has_edge_feats) {
    // Real-valued edge features: costed with the coding stage.
    if (ctx.trace) ctx.trace->coding_flops += static_cast<std::uint64_t>(e) * edge_dim_ * d;
    const Tensor projected = edge_proj_.forward(edge_feats);
    messages = ad::add(messages, steps == 1 ? projected : ad::concat_rows(std::vector<Tensor>(steps, projected)));
  }
  Tensor h = ad::add(s, ad::scatter_add_rows<float>(messages, dst_t, s.rows()));
  check_finite(ctx, h, "mpnn");
  return h;
}

void MessagePassing::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".w", w_, true});
  if (edge_dim_ > 0) edge_proj_.collect(prefix + ".edge_proj", out);
}

}  // namespace sghormer::blocks
