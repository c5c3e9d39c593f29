#pragma once

#include <string>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/srb.hpp"

namespace sghormer::blocks {

using ad::BlockLayout;

// first_step: scores from step 1 are reused at every step.
// satt: scores are recomputed at every step.
enum class AttentionMode { first_step, satt };

AttentionMode attention_mode_from_string(const std::string& name);  // throws ConfigError
std::string to_string(AttentionMode mode);

struct AttentionConfig {
  std::size_t d = 64;
  std::size_t heads = 4;
  AttentionMode mode = AttentionMode::first_step;
  float attn_scale = 0.0f;  // 0 selects 1/d'
  bool use_srb = true;
  neurons::NeuronConfig neuron;

  std::size_t head_dim() const { return d / heads; }
  float scale() const { return attn_scale > 0.0f ? attn_scale : 1.0f / static_cast<float>(head_dim()); }
};

// Softmax-free spiking self-attention. Each of Q, K, V comes from its own
// rectify block (whose linear layer is the projection) and neuron; heads
// are column chunks of width d/M. Per head and step:
//   H = scale · popcount(Q_sp Kᵀ_sp) · V_sp, restricted to graph blocks.
class SpikingAttention {
 public:
  SpikingAttention() = default;
  SpikingAttention(const AttentionConfig& cfg, std::mt19937_64& rng);

  // s: stacked spikes [T·N×d] -> H_global [T·N×d].
  Tensor forward(const Tensor& s, std::size_t steps, const BlockLayout& layout, const Context& ctx) const;

  const AttentionConfig& config() const { return cfg_; }
  SpikingRectifyBlock& projection(char which);
  neurons::SpikingNeuron& neuron(char which);

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  AttentionConfig cfg_;
  SpikingRectifyBlock q_, k_, v_;
  neurons::SpikingNeuron nq_, nk_, nv_;
};

}  // namespace sghormer::blocks
