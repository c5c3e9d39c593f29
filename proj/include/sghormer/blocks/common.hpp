#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "sghormer/autodiff/tensor.hpp"
#include "sghormer/neurons/neuron.hpp"
#include "sghormer/neurons/spike_train.hpp"

namespace sghormer::blocks {

using ad::Tensor;
using neurons::SpikeTrain;

enum class Mode { train, eval };

// One costed operation of an instrumented forward. `fire_rate` is measured
// on the binary tensor that drives the operation's synapses.
struct OpRecord {
  std::size_t t = 0;
  std::size_t layer = 0;
  std::string block;  // srb | attn | mpnn
  std::string op;
  std::uint64_t flops = 0;
  double fire_rate = 0.0;
};

// A spike tensor observed at a block seam.
struct SpikeRecord {
  std::string where;
  Tensor spikes;
};

struct Trace {
  std::vector<OpRecord> ops;
  std::vector<SpikeRecord> spikes;
  // Layer 0, head 0: raw popcount scores per computed step, flat per block.
  std::vector<std::vector<float>> attention;
  std::uint64_t coding_flops = 0;
  bool forward_ran = false;

  void clear() { *this = Trace{}; }
};

struct Context {
  Mode mode = Mode::eval;
  std::mt19937_64* rng = nullptr;  // required in train mode when SRB noise is on
  Trace* trace = nullptr;
  bool check_finite = false;  // throw NumericError naming the block on NaN/Inf
  std::size_t layer = 0;

  bool training() const { return mode == Mode::train; }
};

// Spike trains travel between blocks stacked step-major: row t*N + i holds
// node i at step t.
Tensor stack_steps(const SpikeTrain& train);
SpikeTrain unstack_steps(const Tensor& stacked, std::size_t steps);
Tensor step_rows(const Tensor& stacked, std::size_t steps, std::size_t t);
// Fraction of ones among the rows of step t.
double step_fire_rate(const Tensor& stacked, std::size_t steps, std::size_t t);

// Runs a neuron over stacked per-step currents and returns stacked spikes.
Tensor fire(const neurons::SpikingNeuron& neuron, const Tensor& stacked_current, std::size_t steps);

// Throws ContractError when `t` is not binary.
void require_binary(const Tensor& t, const std::string& where);
// Throws NumericError naming `block` when ctx.check_finite and t has NaN/Inf.
void check_finite(const Context& ctx, const Tensor& t, const std::string& block);

void record_spikes(const Context& ctx, const std::string& where, const Tensor& spikes);
void record_op(const Context& ctx, std::size_t t, const std::string& block, const std::string& op,
               std::uint64_t flops, double fire_rate);

}  // namespace sghormer::blocks
