#include "sghormer/blocks/encoder.hpp"

#include <algorithm>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

RateEncoder::RateEncoder(std::size_t in_dim, std::size_t d, const neurons::NeuronConfig& neuron,
                         std::mt19937_64& rng)
    : linear_(in_dim, d, rng), neuron_(neuron) {
  // Start every unit at threshold so the input decides whether it fires.
  auto b = linear_.bias().data();
  std::fill(b.begin(), b.end(), neuron.v_th);
}

Tensor RateEncoder::forward(const Tensor& x, std::size_t steps, const Context& ctx) const {
  if (steps == 0) throw ContractError("rate encoder: T must be at least 1");
  if (x.rank() != 2 || x.cols() != linear_.in_dim()) {
    throw DimensionError("rate encoder: input " + ad::shape_str(x.shape()) + " but the layer expects " +
                         std::to_string(linear_.in_dim()) + " columns");
  }
  const Tensor current = linear_.forward(x);
  check_finite(ctx, current, "encoder");
  if (ctx.trace) ctx.trace->coding_flops += static_cast<std::uint64_t>(x.rows()) * x.cols() * linear_.out_dim();
  const auto train = neuron_.run(std::vector<Tensor>(steps, current));
  Tensor spikes = stack_steps(train);
  record_spikes(ctx, "encoder", spikes);
  return spikes;
}

void RateEncoder::collect(const std::string& prefix, ParamList& out) const {
  linear_.collect(prefix + ".linear", out);
  if (neuron_.plif_raw().defined()) out.push_back({prefix + ".plif_raw", neuron_.plif_raw(), true});
}

SpikeTrain rate_encode(const Tensor& x_feat, const Tensor& x_enc, std::size_t steps, const RateEncoder& encoder,
                       const Context& ctx) {
  Tensor x = x_feat;
  if (x_enc.defined() && x_enc.numel() > 0) {
    if (x_enc.rows() != x_feat.rows()) {
      throw DimensionError("rate_encode: " + std::to_string(x_enc.rows()) + " encoding rows for " +
                           std::to_string(x_feat.rows()) + " nodes");
    }
    x = ad::concat_cols<float>({x_feat, x_enc});
  }
  return unstack_steps(encoder.forward(x, steps, ctx), steps);
}

}  // namespace sghormer::blocks
