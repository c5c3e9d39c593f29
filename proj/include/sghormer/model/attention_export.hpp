#pragma once

#include <optional>
#include <vector>

#include "json.hpp"
#include "sghormer/model/model.hpp"

namespace sghormer::model {

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

struct AttentionExport {
  std::size_t num_nodes = 0;
  // Layer 0, head 0 popcount scores (before scaling): T matrices, or one in first_step mode.
  std::vector<std::vector<float>> spiking;
  std::vector<float> mask;  // spiking[0] > 0
  std::vector<float> baseline;
  std::optional<double> pearson_r;  // spiking[0] vs baseline, off-diagonal entries

  nlohmann::json to_json() const;
};

// Runs both models in eval mode on a single-graph batch. Throws
// ContractError for batches holding more than one graph.
AttentionExport export_attention(const SGHormer& spiking, const BaselineTransformer& baseline,
                                 const graph::GraphBatch& single);

}  // namespace sghormer::model
