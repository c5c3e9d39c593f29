#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sghormer/autodiff/tensor.hpp"
#include "sghormer/neurons/spike_train.hpp"

namespace sghormer::neurons {

enum class NeuronKind { IF, LIF, PLIF };

std::string to_string(NeuronKind kind);
NeuronKind neuron_kind_from_string(const std::string& name);  // throws ConfigError

struct NeuronConfig {
  NeuronKind kind = NeuronKind::LIF;
  float beta = 0.5f;  // decay, (0, 1]
  float v_th = 1.0f;
  float v_reset = 0.0f;
  float surrogate_width = 2.0f;  // arctan surrogate alpha

  bool operator==(const NeuronConfig&) const = default;
};

// Human-readable problems with cfg; empty when valid.
std::vector<std::string> validate(const NeuronConfig& cfg);

struct NeuronState {
  Tensor v;
};

NeuronState reset_state(const ad::Shape& shape, const NeuronConfig& cfg);

// One discrete update with hard reset:
//   LIF/PLIF: v <- v + beta * (I - (v - v_reset))
//   IF:       v <- v + I
//   S = [v >= v_th];  v <- v * (1 - S) + v_reset * S
// `beta` overrides cfg.beta when defined (PLIF passes logistic(raw) here).
std::pair<Tensor, NeuronState> neuron_step(const NeuronState& state, const Tensor& current,
                                           const NeuronConfig& cfg, const Tensor& beta = Tensor());

// Folds neuron_step over the currents from a fresh state.
SpikeTrain neuron_run(const std::vector<Tensor>& currents, const NeuronConfig& cfg,
                      const Tensor& beta = Tensor());

// A neuron population with its own (PLIF) decay parameter.
class SpikingNeuron {
 public:
  SpikingNeuron() = default;
  explicit SpikingNeuron(const NeuronConfig& cfg);

  const NeuronConfig& config() const { return cfg_; }
  void set_threshold(float v_th) { cfg_.v_th = v_th; }

  // Logistic(plif_raw) for PLIF, undefined otherwise.
  Tensor effective_beta() const;
  // Learnable pre-logistic decay; defined only for PLIF.
  Tensor& plif_raw() { return plif_raw_; }
  const Tensor& plif_raw() const { return plif_raw_; }

  SpikeTrain run(const std::vector<Tensor>& currents) const;

 private:
  NeuronConfig cfg_;
  Tensor plif_raw_;
};

}  // namespace sghormer::neurons
