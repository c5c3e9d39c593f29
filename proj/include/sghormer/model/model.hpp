#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sghormer/blocks/attention.hpp"
#include "sghormer/blocks/common.hpp"
#include "sghormer/blocks/encoder.hpp"
#include "sghormer/blocks/layers.hpp"
#include "sghormer/blocks/mpnn.hpp"
#include "sghormer/blocks/smlp.hpp"
#include "sghormer/graph/graph.hpp"
#include "sghormer/model/config.hpp"

namespace sghormer::model {

using blocks::Context;
using blocks::Mode;
using blocks::ParamList;
using blocks::Tensor;
using blocks::Trace;

// Node inputs of a batch: features [N×in_dim] and encodings [N×(k+K)].
struct NodeInputs {
  Tensor features;
  Tensor encodings;
  Tensor edge_feats;  // undefined when the batch has no edge features
};

// Throws DimensionError when the batch widths disagree with cfg.
NodeInputs node_inputs(const graph::GraphBatch& batch, const ModelConfig& cfg);

class GraphModel {
 public:
  virtual ~GraphModel() = default;

  // Graph tasks: [B×out]; node tasks: [N×out].
  virtual Tensor forward(const graph::GraphBatch& batch, Context& ctx) const = 0;
  virtual ParamList parameters() const = 0;
  virtual std::string kind() const = 0;

  const ModelConfig& config() const { return cfg_; }

  // Trainable tensors only.
  std::vector<Tensor> trainable() const;
  void zero_grad() const;

 protected:
  explicit GraphModel(const ModelConfig& cfg) : cfg_(cfg) {}
  ModelConfig cfg_;
};

// Rate encoder, L spiking graph layers and a linear readout on firing rates.
class SGHormer final : public GraphModel {
 public:
  struct Layer {
    blocks::MessagePassing mpnn;
    blocks::SpikingAttention attention;
    blocks::SpikingMLP smlp;
  };

  // Throws ConfigError listing every problem in cfg.
  explicit SGHormer(const ModelConfig& cfg);

  Tensor forward(const graph::GraphBatch& batch, Context& ctx) const override;
  ParamList parameters() const override;
  std::string kind() const override { return "sghormer"; }

  blocks::RateEncoder& encoder() { return encoder_; }
  Layer& layer(std::size_t l) { return layers_.at(l); }
  blocks::Linear& head() { return head_; }

  // Overrides v_th of every neuron (used for threshold sweeps).
  void set_threshold(float v_th);

 private:
  blocks::RateEncoder encoder_;
  std::vector<Layer> layers_;
  blocks::Linear head_;
};

// Same skeleton with real-valued softmax attention, ReLU MLP and T = 1.
class BaselineTransformer final : public GraphModel {
 public:
  struct Layer {
    blocks::MessagePassing mpnn;
    blocks::Linear q, k, v;
    blocks::Linear mlp;
    blocks::Norm mlp_norm;
  };

  explicit BaselineTransformer(const ModelConfig& cfg);

  Tensor forward(const graph::GraphBatch& batch, Context& ctx) const override;
  ParamList parameters() const override;
  std::string kind() const override { return "baseline"; }

 private:
  blocks::Linear encoder_;
  std::vector<Layer> layers_;
  blocks::Linear head_;
};

std::unique_ptr<GraphModel> make_model(const std::string& kind, const ModelConfig& cfg);

}  // namespace sghormer::model
