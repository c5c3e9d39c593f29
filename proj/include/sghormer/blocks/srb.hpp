#pragma once

#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/layers.hpp"

namespace sghormer::blocks {

// Per-element spike statistics over time: mean and (biased) variance.
struct SpikeStatistics {
  std::vector<float> mean;
  std::vector<float> var;
};

// `stacked` holds T steps of N×d spikes.
SpikeStatistics spike_statistics(const Tensor& stacked, std::size_t steps);
SpikeStatistics spike_statistics(const SpikeTrain& train);

// Spiking rectify block: X = S - w ⊙ U, out = Norm(Linear(X)), with
// U ~ Normal(mean, variance = max(1 - var, 1e-6)) drawn per element and step
// in training, U = mean in eval. U is a constant for backward.
// With noise disabled the block reduces to Norm(Linear(S)).
class SpikingRectifyBlock {
 public:
  static constexpr float kNoiseInit = 0.1f;
  static constexpr float kMinVariance = 1e-6f;

  SpikingRectifyBlock() = default;
  SpikingRectifyBlock(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng, bool use_noise = true);

  // Statistics come from all `steps` steps of `s`; only the first `used`
  // steps are rectified and projected. Returns [used·N×out_dim].
  Tensor forward(const Tensor& s, std::size_t steps, std::size_t used, const Context& ctx,
                 const std::string& name = "srb") const;
  Tensor forward(const Tensor& s, std::size_t steps, const Context& ctx) const {
    return forward(s, steps, steps, ctx);
  }

  bool use_noise() const { return use_noise_; }
  Tensor& noise_weight() { return noise_weight_; }
  const Tensor& noise_weight() const { return noise_weight_; }
  Linear& linear() { return linear_; }
  const Linear& linear() const { return linear_; }
  Norm& norm() { return norm_; }
  const Norm& norm() const { return norm_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  bool use_noise_ = true;
  Tensor noise_weight_;
  Linear linear_;
  Norm norm_;
};

}  // namespace sghormer::blocks
