#pragma once

#include <vector>

#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/layers.hpp"

namespace sghormer::blocks {

// depth × (Linear -> Norm -> spiking neuron), applied to every step.
class SpikingMLP {
 public:
  SpikingMLP() = default;
  SpikingMLP(std::size_t d, std::size_t depth, const neurons::NeuronConfig& neuron, std::mt19937_64& rng);

  // h: stacked real [T·N×d] -> stacked spikes [T·N×d]. `input_rates[t]` is
  // the fire rate that drives the first stage at step t (used for costing).
  Tensor forward(const Tensor& h, std::size_t steps, const Context& ctx,
                 const std::vector<double>& input_rates = {}) const;

  std::size_t depth() const { return linears_.size(); }
  Linear& linear(std::size_t i) { return linears_.at(i); }
  Norm& norm(std::size_t i) { return norms_.at(i); }
  neurons::SpikingNeuron& neuron(std::size_t i) { return neurons_.at(i); }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  std::vector<Linear> linears_;
  std::vector<Norm> norms_;
  std::vector<neurons::SpikingNeuron> neurons_;
};

}  // namespace sghormer::blocks
