#include "sghormer/model/attention_export.hpp"

#include <cmath>

#include "sghormer/autodiff/tensor.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::model {

using nlohmann::json;

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("pearson: inputs differ in length");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

namespace {

json matrix(const std::vector<float>& flat, std::size_t n) {
  json rows = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(flat[i * n + j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

json AttentionExport::to_json() const {
  json spiking_json = json::array();
  for (const auto& m : spiking) spiking_json.push_back(matrix(m, num_nodes));
  return json{{"num_nodes", num_nodes},
              {"spiking_attn", std::move(spiking_json)},
              {"spiking_mask", matrix(mask, num_nodes)},
              {"baseline_attn", matrix(baseline, num_nodes)},
              {"pearson_r", pearson_r ? json(*pearson_r) : json(nullptr)}};
}

AttentionExport export_attention(const SGHormer& spiking, const BaselineTransformer& baseline,
                                 const graph::GraphBatch& single) {
  if (single.num_graphs() != 1) {
    throw ContractError("export_attention: expected a single graph, got " + std::to_string(single.num_graphs()));
  }
  ad::NoGradGuard no_grad;
  AttentionExport out;
  out.num_nodes = single.num_nodes();

  Trace spike_trace;
  Context ctx;
  ctx.mode = Mode::eval;
  ctx.trace = &spike_trace;
  spiking.forward(single, ctx);
  out.spiking = spike_trace.attention;

  Trace base_trace;
  Context bctx;
  bctx.mode = Mode::eval;
  bctx.trace = &base_trace;
  baseline.forward(single, bctx);
  out.baseline = base_trace.attention.at(0);

  out.mask.resize(out.spiking.at(0).size());
  for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] = out.spiking[0][i] > 0.0f ? 1.0f : 0.0f;

  std::vector<double> a, b;
  for (std::size_t i = 0; i < out.num_nodes; ++i)
    for (std::size_t j = 0; j < out.num_nodes; ++j) {
      if (i == j) continue;
      a.push_back(out.spiking[0][i * out.num_nodes + j]);
      b.push_back(out.baseline[i * out.num_nodes + j]);
    }
  out.pearson_r = pearson(a, b);
  return out;
}

}  // namespace sghormer::model
