#include "sghormer/blocks/common.hpp"

#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

Tensor stack_steps(const SpikeTrain& train) {
  if (train.time_steps() == 1) return train.step(0);
  return ad::concat_rows(train.steps());
}

SpikeTrain unstack_steps(const Tensor& stacked, std::size_t steps) {
  std::vector<Tensor> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) out.push_back(step_rows(stacked, steps, t));
  return SpikeTrain(std::move(out));
}

Tensor step_rows(const Tensor& stacked, std::size_t steps, std::size_t t) {
  if (steps == 0 || stacked.rows() % steps != 0) {
    throw DimensionError("step_rows: " + std::to_string(stacked.rows()) + " rows do not split into " +
                         std::to_string(steps) + " steps");
  }
  if (steps == 1) return stacked;
  const std::size_t n = stacked.rows() / steps;
  return ad::slice_rows(stacked, t * n, (t + 1) * n);
}

double step_fire_rate(const Tensor& stacked, std::size_t steps, std::size_t t) {
  const std::size_t per_step = stacked.numel() / steps;
  if (per_step == 0) return 0.0;
  auto d = stacked.data().subspan(t * per_step, per_step);
  std::size_t ones = 0;
  for (float x : d) {
    if (x == 1.0f) ++ones;
    else if (x != 0.0f && !ad::smooth_spikes_active()) throw ContractError("step_fire_rate: tensor is not binary");
  }
  return static_cast<double>(ones) / static_cast<double>(per_step);
}

Tensor fire(const neurons::SpikingNeuron& neuron, const Tensor& stacked_current, std::size_t steps) {
  std::vector<Tensor> currents;
  currents.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) currents.push_back(step_rows(stacked_current, steps, t));
  return stack_steps(neuron.run(currents));
}

void require_binary(const Tensor& t, const std::string& where) {
  if (ad::smooth_spikes_active()) return;
  if (!neurons::is_binary(t)) throw ContractError(where + ": spike tensor is not binary");
}

void check_finite(const Context& ctx, const Tensor& t, const std::string& block) {
  if (!ctx.check_finite) return;
  for (float x : t.data()) {
    if (!std::isfinite(x)) {
      throw NumericError("non-finite value first produced by block '" + block + "' in layer " +
                         std::to_string(ctx.layer));
    }
  }
}

void record_spikes(const Context& ctx, const std::string& where, const Tensor& spikes) {
  require_binary(spikes, where);
  if (ctx.trace) ctx.trace->spikes.push_back({where, spikes});
}

void record_op(const Context& ctx, std::size_t t, const std::string& block, const std::string& op,
               std::uint64_t flops, double fire_rate) {
  if (!ctx.trace) return;
  ctx.trace->ops.push_back({t, ctx.layer, block, op, flops, fire_rate});
}

}  // namespace sghormer::blocks
