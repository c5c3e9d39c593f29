#include "sghormer/model/model.hpp"

#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::model {

namespace {

void require_valid(const ModelConfig& cfg) {
  const auto errors = validate(cfg);
  if (errors.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

Tensor readout(const Tensor& rates, const graph::GraphBatch& batch, const ModelConfig& cfg,
               const blocks::Linear& head) {
  if (is_graph_level(cfg.task)) return head.forward(ad::segment_mean_rows(rates, batch.layout));
  return head.forward(rates);
}

}  // namespace

NodeInputs node_inputs(const graph::GraphBatch& batch, const ModelConfig& cfg) {
  const std::size_t n = batch.num_nodes();
  if (batch.node_dim != cfg.in_dim) {
    throw DimensionError("batch has " + std::to_string(batch.node_dim) + " node features, model expects " +
                         std::to_string(cfg.in_dim));
  }
  if (batch.lap_dim != cfg.k || batch.rw_dim != cfg.K) {
    throw DimensionError("batch encodings are (" + std::to_string(batch.lap_dim) + "," +
                         std::to_string(batch.rw_dim) + "), model expects (" + std::to_string(cfg.k) + "," +
                         std::to_string(cfg.K) + ")");
  }
  if (batch.edge_dim != cfg.edge_dim && batch.num_edges() > 0) {
    throw DimensionError("batch has " + std::to_string(batch.edge_dim) + " edge features, model expects " +
                         std::to_string(cfg.edge_dim));
  }
  NodeInputs in;
  in.features = Tensor({n, cfg.in_dim}, batch.node_feats);
  std::vector<float> enc(n * (cfg.k + cfg.K));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cfg.k; ++c) enc[i * (cfg.k + cfg.K) + c] = batch.lap_pe[i * cfg.k + c];
    for (std::size_t c = 0; c < cfg.K; ++c) enc[i * (cfg.k + cfg.K) + cfg.k + c] = batch.rwse[i * cfg.K + c];
  }
  in.encodings = Tensor({n, cfg.k + cfg.K}, std::move(enc));
  if (cfg.edge_dim > 0 && batch.num_edges() > 0) in.edge_feats = Tensor({batch.num_edges(), cfg.edge_dim}, batch.edge_feats);
  return in;
}

std::vector<Tensor> GraphModel::trainable() const {
  std::vector<Tensor> out;
  for (const auto& p : parameters())
    if (p.trainable) out.push_back(p.tensor);
  return out;
}

void GraphModel::zero_grad() const {
  for (const auto& p : parameters()) p.tensor.zero_grad();
}

// ---------------------------------------------------------------------------

SGHormer::SGHormer(const ModelConfig& cfg) : GraphModel(cfg) {
  require_valid(cfg);
  std::mt19937_64 rng(cfg.seed);
  encoder_ = blocks::RateEncoder(cfg.encoder_in(), cfg.d, cfg.neuron, rng);
  for (std::size_t l = 0; l < cfg.L; ++l) {
    Layer layer;
    layer.mpnn = blocks::MessagePassing(cfg.d, cfg.edge_dim, rng);
    layer.attention = blocks::SpikingAttention(cfg.attention(), rng);
    layer.smlp = blocks::SpikingMLP(cfg.d, cfg.smlp_depth, cfg.neuron, rng);
    layers_.push_back(std::move(layer));
  }
  head_ = blocks::Linear(cfg.d, cfg.out_dim(), rng);
}

Tensor SGHormer::forward(const graph::GraphBatch& batch, Context& ctx) const {
  const NodeInputs in = node_inputs(batch, cfg_);
  const std::size_t steps = cfg_.T;
  ctx.layer = 0;
  const Tensor x = in.encodings.numel() > 0 ? ad::concat_cols<float>({in.features, in.encodings}) : in.features;
  Tensor s = encoder_.forward(x, steps, ctx);

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    ctx.layer = l;
    const Layer& layer = layers_[l];
    std::vector<double> rates(steps);
    for (std::size_t t = 0; t < steps; ++t) rates[t] = blocks::step_fire_rate(s, steps, t);
    const Tensor local = layer.mpnn.forward(s, steps, batch.src, batch.dst, in.edge_feats, ctx);
    const Tensor global = layer.attention.forward(s, steps, batch.layout, ctx);
    Tensor h = ad::add(local, global);
    if (cfg_.residual) h = ad::add(h, s);
    s = layer.smlp.forward(h, steps, ctx, rates);
    blocks::record_spikes(ctx, "layer" + std::to_string(l), s);
  }

  // Firing-rate matrix of the last layer.
  Tensor rates = blocks::step_rows(s, steps, 0);
  for (std::size_t t = 1; t < steps; ++t) rates = ad::add(rates, blocks::step_rows(s, steps, t));
  if (steps > 1) rates = ad::scale(rates, 1.0f / static_cast<float>(steps));
  Tensor out = readout(rates, batch, cfg_, head_);
  blocks::check_finite(ctx, out, "head");
  if (ctx.trace) ctx.trace->forward_ran = true;
  return out;
}

ParamList SGHormer::parameters() const {
  ParamList out;
  encoder_.collect("encoder", out);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = "layers." + std::to_string(l);
    layers_[l].mpnn.collect(p + ".mpnn", out);
    layers_[l].attention.collect(p + ".attn", out);
    layers_[l].smlp.collect(p + ".smlp", out);
  }
  head_.collect("head", out);
  return out;
}

void SGHormer::set_threshold(float v_th) {
  cfg_.neuron.v_th = v_th;
  encoder_.neuron().set_threshold(v_th);
  for (auto& layer : layers_) {
    for (char c : {'q', 'k', 'v'}) layer.attention.neuron(c).set_threshold(v_th);
    for (std::size_t i = 0; i < layer.smlp.depth(); ++i) layer.smlp.neuron(i).set_threshold(v_th);
  }
}

// ---------------------------------------------------------------------------

BaselineTransformer::BaselineTransformer(const ModelConfig& cfg) : GraphModel(cfg) {
  require_valid(cfg);
  cfg_.T = 1;
  std::mt19937_64 rng(cfg.seed);
  encoder_ = blocks::Linear(cfg.encoder_in(), cfg.d, rng);
  for (std::size_t l = 0; l < cfg.L; ++l) {
    Layer layer;
    layer.mpnn = blocks::MessagePassing(cfg.d, cfg.edge_dim, rng);
    layer.q = blocks::Linear(cfg.d, cfg.d, rng);
    layer.k = blocks::Linear(cfg.d, cfg.d, rng);
    layer.v = blocks::Linear(cfg.d, cfg.d, rng);
    layer.mlp = blocks::Linear(cfg.d, cfg.d, rng);
    layer.mlp_norm = blocks::Norm(cfg.d);
    layers_.push_back(std::move(layer));
  }
  head_ = blocks::Linear(cfg.d, cfg.out_dim(), rng);
}

Tensor BaselineTransformer::forward(const graph::GraphBatch& batch, Context& ctx) const {
  const NodeInputs in = node_inputs(batch, cfg_);
  const std::size_t dh = cfg_.d / cfg_.M;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  Context inner = ctx;
  inner.trace = nullptr;
  const Tensor x = in.encodings.numel() > 0 ? ad::concat_cols<float>({in.features, in.encodings}) : in.features;
  Tensor h = encoder_.forward(x);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    ctx.layer = inner.layer = l;
    const Layer& layer = layers_[l];
    const Tensor local = layer.mpnn.forward(h, 1, batch.src, batch.dst, in.edge_feats, inner);
    const Tensor q = layer.q.forward(h), k = layer.k.forward(h), v = layer.v.forward(h);
    std::vector<Tensor> heads;
    for (std::size_t m = 0; m < cfg_.M; ++m) {
      const auto cols = [&](const Tensor& t) { return cfg_.M == 1 ? t : ad::slice_cols(t, m * dh, (m + 1) * dh); };
      const Tensor scores = ad::scale(ad::block_matmul_nt(cols(q), cols(k), batch.layout), inv_sqrt);
      const Tensor attn = ad::block_softmax(scores, batch.layout);
      if (ctx.trace && l == 0 && m == 0) {
        auto a = attn.data();
        ctx.trace->attention.emplace_back(a.begin(), a.end());
      }
      heads.push_back(ad::block_matmul(attn, cols(v), batch.layout));
    }
    const Tensor global = cfg_.M == 1 ? heads[0] : ad::concat_cols(heads);
    h = ad::relu(layer.mlp_norm.forward(layer.mlp.forward(ad::add(local, global)), ctx.training()));
    blocks::check_finite(ctx, h, "baseline layer" + std::to_string(l));
  }
  Tensor out = readout(h, batch, cfg_, head_);
  if (ctx.trace) {
    ctx.trace->coding_flops += static_cast<std::uint64_t>(batch.num_nodes()) * cfg_.encoder_in() * cfg_.d;
    ctx.trace->forward_ran = true;
  }
  return out;
}

ParamList BaselineTransformer::parameters() const {
  ParamList out;
  encoder_.collect("encoder", out);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string p = "layers." + std::to_string(l);
    layers_[l].mpnn.collect(p + ".mpnn", out);
    layers_[l].q.collect(p + ".q", out);
    layers_[l].k.collect(p + ".k", out);
    layers_[l].v.collect(p + ".v", out);
    layers_[l].mlp.collect(p + ".mlp", out);
    layers_[l].mlp_norm.collect(p + ".mlp_norm", out);
  }
  head_.collect("head", out);
  return out;
}

std::unique_ptr<GraphModel> make_model(const std::string& kind, const ModelConfig& cfg) {
  if (kind == "sghormer") return std::make_unique<SGHormer>(cfg);
  if (kind == "baseline") return std::make_unique<BaselineTransformer>(cfg);
  throw ConfigError("unknown model kind '" + kind + "'");
}

}  // namespace sghormer::model
