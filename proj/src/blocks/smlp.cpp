#include "sghormer/blocks/smlp.hpp"

#include "sghormer/errors.hpp"

namespace sghormer::blocks {

SpikingMLP::SpikingMLP(std::size_t d, std::size_t depth, const neurons::NeuronConfig& neuron, std::mt19937_64& rng) {
  if (depth == 0) throw ConfigError("smlp depth must be at least 1");
  for (std::size_t i = 0; i < depth; ++i) {
    linears_.emplace_back(d, d, rng);
    norms_.emplace_back(d);
    neurons_.emplace_back(neuron);
  }
}

Tensor SpikingMLP::forward(const Tensor& h, std::size_t steps, const Context& ctx,
                           const std::vector<double>& input_rates) const {
  if (steps == 0 || h.rows() % steps != 0) throw DimensionError("smlp: rows do not split into steps");
  const std::size_t n = h.rows() / steps;
  Tensor x = h;
  for (std::size_t i = 0; i < linears_.size(); ++i) {
    const std::uint64_t flops = static_cast<std::uint64_t>(n) * linears_[i].in_dim() * linears_[i].out_dim();
    for (std::size_t t = 0; t < steps; ++t) {
      const double rate = i == 0 ? (t < input_rates.size() ? input_rates[t] : 1.0) : step_fire_rate(x, steps, t);
      record_op(ctx, t, "attn", "smlp", flops, rate);
    }
    const Tensor pre = norms_[i].forward(linears_[i].forward(x), ctx.training());
    check_finite(ctx, pre, "smlp");
    x = fire(neurons_[i], pre, steps);
    record_spikes(ctx, "smlp", x);
  }
  return x;
}

void SpikingMLP::collect(const std::string& prefix, ParamList& out) const {
  for (std::size_t i = 0; i < linears_.size(); ++i) {
    const std::string p = prefix + "." + std::to_string(i);
    linears_[i].collect(p + ".linear", out);
    norms_[i].collect(p + ".norm", out);
    if (neurons_[i].plif_raw().defined()) out.push_back({p + ".plif_raw", neurons_[i].plif_raw(), true});
  }
}

}  // namespace sghormer::blocks
