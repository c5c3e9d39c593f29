#include "sghormer/blocks/attention.hpp"

#include "sghormer/blocks/binary_matmul.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

AttentionMode attention_mode_from_string(const std::string& name) {
  if (name == "first_step") return AttentionMode::first_step;
  if (name == "satt") return AttentionMode::satt;
  throw ConfigError("unknown attention_mode '" + name + "' (expected first_step or satt)");
}

std::string to_string(AttentionMode mode) { return mode == AttentionMode::first_step ? "first_step" : "satt"; }

SpikingAttention::SpikingAttention(const AttentionConfig& cfg, std::mt19937_64& rng)
    : cfg_(cfg),
      q_(cfg.d, cfg.d, rng, cfg.use_srb),
      k_(cfg.d, cfg.d, rng, cfg.use_srb),
      v_(cfg.d, cfg.d, rng, cfg.use_srb),
      nq_(cfg.neuron),
      nk_(cfg.neuron),
      nv_(cfg.neuron) {
  if (cfg.heads == 0 || cfg.d % cfg.heads != 0) {
    throw ConfigError("attention: head count " + std::to_string(cfg.heads) + " must divide d=" + std::to_string(cfg.d));
  }
}

SpikingRectifyBlock& SpikingAttention::projection(char which) {
  switch (which) {
    case 'q': return q_;
    case 'k': return k_;
    case 'v': return v_;
  }
  throw ContractError("attention: projection must be q, k or v");
}

neurons::SpikingNeuron& SpikingAttention::neuron(char which) {
  switch (which) {
    case 'q': return nq_;
    case 'k': return nk_;
    case 'v': return nv_;
  }
  throw ContractError("attention: neuron must be q, k or v");
}

Tensor SpikingAttention::forward(const Tensor& s, std::size_t steps, const BlockLayout& layout,
                                 const Context& ctx) const {
  const std::size_t n = layout.total_rows();
  if (s.rows() != steps * n || s.cols() != cfg_.d) {
    throw DimensionError("attention: input " + ad::shape_str(s.shape()) + " does not match " +
                         std::to_string(steps) + " steps of " + std::to_string(n) + "x" + std::to_string(cfg_.d));
  }
  const std::size_t qk_steps = cfg_.mode == AttentionMode::first_step ? 1 : steps;
  const std::size_t d = cfg_.d, dh = cfg_.head_dim();

  const Tensor q = fire(nq_, q_.forward(s, steps, qk_steps, ctx, "q"), qk_steps);
  const Tensor k = fire(nk_, k_.forward(s, steps, qk_steps, ctx, "k"), qk_steps);
  const Tensor v = fire(nv_, v_.forward(s, steps, steps, ctx, "v"), steps);
  record_spikes(ctx, "attn/q", q);
  record_spikes(ctx, "attn/k", k);
  record_spikes(ctx, "attn/v", v);

  std::uint64_t block_entries = 0;
  for (std::size_t g = 0; g < layout.num_blocks(); ++g) block_entries += layout.size(g) * layout.size(g);
  const std::uint64_t proj_flops = static_cast<std::uint64_t>(n) * d * d;

  std::vector<Tensor> scores(cfg_.heads);
  std::vector<Tensor> out_steps;
  out_steps.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const double s_rate = step_fire_rate(s, steps, t);
    const std::size_t projections = t < qk_steps ? 3 : 1;
    for (std::size_t p = 0; p < projections; ++p) record_op(ctx, t, "attn", "qkv_proj", proj_flops, s_rate);

    const Tensor v_t = step_rows(v, steps, t);
    if (t < qk_steps) {
      const Tensor q_t = step_rows(q, qk_steps, t);
      const Tensor k_t = step_rows(k, qk_steps, t);
      for (std::size_t m = 0; m < cfg_.heads; ++m) {
        const Tensor qh = cfg_.heads == 1 ? q_t : ad::slice_cols(q_t, m * dh, (m + 1) * dh);
        const Tensor kh = cfg_.heads == 1 ? k_t : ad::slice_cols(k_t, m * dh, (m + 1) * dh);
        scores[m] = binary_block_scores(qh, kh, layout);
      }
      record_op(ctx, t, "attn", "scores", block_entries * d, step_fire_rate(q, qk_steps, t));
      if (ctx.trace && ctx.layer == 0) {
        auto sd = scores[0].data();
        ctx.trace->attention.emplace_back(sd.begin(), sd.end());
      }
    }
    std::vector<Tensor> heads;
    heads.reserve(cfg_.heads);
    for (std::size_t m = 0; m < cfg_.heads; ++m) {
      const Tensor vh = cfg_.heads == 1 ? v_t : ad::slice_cols(v_t, m * dh, (m + 1) * dh);
      heads.push_back(ad::block_matmul(scores[m], vh, layout));
    }
    record_op(ctx, t, "attn", "attn_v", block_entries * d, step_fire_rate(v, steps, t));
    out_steps.push_back(cfg_.heads == 1 ? heads[0] : ad::concat_cols(heads));
  }
  Tensor h = out_steps.size() == 1 ? out_steps[0] : ad::concat_rows(out_steps);
  h = ad::scale(h, cfg_.scale());
  check_finite(ctx, h, "attention");
  return h;
}

void SpikingAttention::collect(const std::string& prefix, ParamList& out) const {
  q_.collect(prefix + ".q", out);
  k_.collect(prefix + ".k", out);
  v_.collect(prefix + ".v", out);
  if (nq_.plif_raw().defined()) {
    out.push_back({prefix + ".q.plif_raw", nq_.plif_raw(), true});
    out.push_back({prefix + ".k.plif_raw", nk_.plif_raw(), true});
    out.push_back({prefix + ".v.plif_raw", nv_.plif_raw(), true});
  }
}

}  // namespace sghormer::blocks
