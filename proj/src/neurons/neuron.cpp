#include "sghormer/neurons/neuron.hpp"

#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::neurons {

bool is_binary(const Tensor& t) {
  for (float x : t.data())
    if (x != 0.0f && x != 1.0f) return false;
  return true;
}

double fire_rate(const Tensor& t) {
  if (t.numel() == 0) return 0.0;
  std::size_t ones = 0;
  for (float x : t.data()) {
    if (x == 1.0f) ++ones;
    else if (x != 0.0f) throw ContractError("fire_rate: tensor is not binary");
  }
  return static_cast<double>(ones) / static_cast<double>(t.numel());
}

SpikeTrain::SpikeTrain(std::vector<Tensor> steps) : steps_(std::move(steps)) {
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    if (steps_[t].shape() != steps_[0].shape()) {
      throw ContractError("spike train step " + std::to_string(t) + " has shape " +
                          ad::shape_str(steps_[t].shape()) + ", expected " + ad::shape_str(steps_[0].shape()));
    }
    if (!ad::smooth_spikes_active() && !is_binary(steps_[t])) {
      throw ContractError("spike train step " + std::to_string(t) + " is not binary");
    }
  }
}

Tensor SpikeTrain::rate() const {
  if (steps_.empty()) throw ContractError("rate() of an empty spike train");
  Tensor acc = steps_[0];
  for (std::size_t t = 1; t < steps_.size(); ++t) acc = ad::add(acc, steps_[t]);
  return ad::scale(acc, 1.0f / static_cast<float>(steps_.size()));
}

double SpikeTrain::fire_rate() const {
  if (steps_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : steps_) total += neurons::fire_rate(s);
  return total / static_cast<double>(steps_.size());
}

// ---------------------------------------------------------------------------

std::string to_string(NeuronKind kind) {
  switch (kind) {
    case NeuronKind::IF: return "IF";
    case NeuronKind::LIF: return "LIF";
    case NeuronKind::PLIF: return "PLIF";
  }
  return "?";
}

NeuronKind neuron_kind_from_string(const std::string& name) {
  if (name == "IF") return NeuronKind::IF;
  if (name == "LIF") return NeuronKind::LIF;
  if (name == "PLIF") return NeuronKind::PLIF;
  throw ConfigError("unknown neuron kind '" + name + "' (expected IF, LIF or PLIF)");
}

std::vector<std::string> validate(const NeuronConfig& cfg) {
  std::vector<std::string> problems;
  if (!(cfg.beta > 0.0f && cfg.beta <= 1.0f)) problems.push_back("neuron.beta must lie in (0, 1]");
  if (!(cfg.v_th > 0.0f)) problems.push_back("neuron.v_th must be positive");
  if (!(cfg.v_th > cfg.v_reset)) problems.push_back("neuron.v_th must exceed neuron.v_reset");
  if (!(cfg.surrogate_width > 0.0f)) problems.push_back("neuron.surrogate_width must be positive");
  return problems;
}

NeuronState reset_state(const ad::Shape& shape, const NeuronConfig& cfg) {
  return NeuronState{Tensor::full(shape, cfg.v_reset)};
}

std::pair<Tensor, NeuronState> neuron_step(const NeuronState& state, const Tensor& current,
                                           const NeuronConfig& cfg, const Tensor& beta) {
  if (state.v.shape() != current.shape()) {
    throw DimensionError("neuron_step: membrane " + ad::shape_str(state.v.shape()) + " vs current " +
                         ad::shape_str(current.shape()));
  }
  Tensor v;
  if (cfg.kind == NeuronKind::IF) {
    v = ad::add(state.v, current);
  } else {
    Tensor drive = ad::sub(current, ad::add_scalar(state.v, -cfg.v_reset));
    Tensor leak = beta.defined() ? ad::mul(drive, beta) : ad::scale(drive, cfg.beta);
    v = ad::add(state.v, leak);
  }
  Tensor spikes = ad::spike_threshold(v, cfg.v_th, cfg.surrogate_width);
  Tensor reset = ad::add(ad::mul(v, ad::rsub_scalar(1.0f, spikes)), ad::scale(spikes, cfg.v_reset));
  return {spikes, NeuronState{reset}};
}

SpikeTrain neuron_run(const std::vector<Tensor>& currents, const NeuronConfig& cfg, const Tensor& beta) {
  if (currents.empty()) throw ContractError("neuron_run: need at least one time step");
  NeuronState state = reset_state(currents.front().shape(), cfg);
  std::vector<Tensor> steps;
  steps.reserve(currents.size());
  for (const auto& current : currents) {
    auto [spikes, next] = neuron_step(state, current, cfg, beta);
    steps.push_back(std::move(spikes));
    state = std::move(next);
  }
  return SpikeTrain(std::move(steps));
}

// ---------------------------------------------------------------------------

SpikingNeuron::SpikingNeuron(const NeuronConfig& cfg) : cfg_(cfg) {
  if (cfg_.kind == NeuronKind::PLIF) {
    // Start from the configured decay: logistic(raw) == beta. beta == 1 is clamped.
    const double b = std::min(static_cast<double>(cfg_.beta), 1.0 - 1e-4);
    plif_raw_ = Tensor::scalar(static_cast<float>(std::log(b / (1.0 - b))), true);
  }
}

Tensor SpikingNeuron::effective_beta() const {
  if (!plif_raw_.defined()) return Tensor();
  return ad::sigmoid(plif_raw_);
}

SpikeTrain SpikingNeuron::run(const std::vector<Tensor>& currents) const {
  return neuron_run(currents, cfg_, effective_beta());
}

}  // namespace sghormer::neurons
