#pragma once

#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/layers.hpp"

namespace sghormer::blocks {

// Shared linear layer followed by one neuron that sees the same current at
// every step, so the firing rate tracks the pre-activation.
class RateEncoder {
 public:
  RateEncoder() = default;
  RateEncoder(std::size_t in_dim, std::size_t d, const neurons::NeuronConfig& neuron, std::mt19937_64& rng);

  // x[N×in_dim] -> stacked spikes [T·N×d].
  Tensor forward(const Tensor& x, std::size_t steps, const Context& ctx) const;

  Linear& linear() { return linear_; }
  const Linear& linear() const { return linear_; }
  neurons::SpikingNeuron& neuron() { return neuron_; }
  const neurons::SpikingNeuron& neuron() const { return neuron_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Linear linear_;
  neurons::SpikingNeuron neuron_;
};

// Concatenates node features with positional/structural encodings (x_enc
// may have zero columns) and rate-codes them over `steps` steps.
SpikeTrain rate_encode(const Tensor& x_feat, const Tensor& x_enc, std::size_t steps, const RateEncoder& encoder,
                       const Context& ctx = {});

}  // namespace sghormer::blocks
