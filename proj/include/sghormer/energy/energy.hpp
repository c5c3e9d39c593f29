#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sghormer/blocks/common.hpp"
#include "sghormer/graph/graph.hpp"
#include "sghormer/model/model.hpp"

namespace sghormer::energy {

// Picojoules per operation.
struct EnergyConfig {
  double alpha_f = 4.5;  // per FLOP
  double alpha_s = 0.9;  // per SOP
};

// Throws ConfigError unless both factors are positive.
void validate(const EnergyConfig& cfg);

inline constexpr double kPicoToMilli = 1e-9;
inline constexpr std::uint64_t kSoftmaxFlopsPerEntry = 5;

// rows · in · out multiply-accumulates, one FLOP each. Throws ContractError on a zero dimension.
std::uint64_t count_flops_linear(std::size_t in_dim, std::size_t out_dim, std::size_t rows);

// Fraction of ones; throws ContractError on non-binary input.
double measure_fire_rate(const ad::Tensor& spikes);

struct BlockRecord {
  std::size_t t = 0;
  std::size_t layer = 0;
  std::string block;
  std::string op;
  std::uint64_t flops = 0;
  double fire_rate = 0.0;
  std::uint64_t sops = 0;  // round(fire_rate · flops)
};

struct EnergyReport {
  EnergyConfig config;
  std::uint64_t flop_coding = 0;
  std::vector<BlockRecord> records;
  // pJ per block kind ("coding", "srb", "mpnn", "attn"); these sum to total_pj.
  std::vector<std::pair<std::string, double>> line_items;
  double total_pj = 0.0;
  double total_mj = 0.0;
  std::optional<double> baseline_total_mj;
  std::optional<double> ratio;  // baseline / spiking

  std::uint64_t total_sops() const;
  double mean_fire_rate() const;  // flop-weighted
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Report from one instrumented forward. Throws ContractError when the trace
// never saw a forward pass.
EnergyReport estimate_energy(const blocks::Trace& trace, const EnergyConfig& cfg = {});

// Runs an eval-mode forward on `batch` and reports it.
EnergyReport estimate_energy(const model::SGHormer& model, const graph::GraphBatch& batch,
                             const EnergyConfig& cfg = {});

// FLOP sheet of the real-valued baseline on a batch, by component.
struct BaselineFlops {
  std::uint64_t coding = 0;
  std::uint64_t qkv_proj = 0;
  std::uint64_t scores = 0;
  std::uint64_t softmax = 0;
  std::uint64_t attn_v = 0;
  std::uint64_t mpnn = 0;
  std::uint64_t mlp = 0;

  std::uint64_t total() const { return coding + qkv_proj + scores + softmax + attn_v + mpnn + mlp; }
  nlohmann::json to_json() const;
};

struct BaselineEnergy {
  BaselineFlops flops;
  double total_pj = 0.0;
  double total_mj = 0.0;
};

// Structural count: depends on shapes only, never on feature values.
BaselineFlops count_baseline_flops(const model::ModelConfig& cfg, const graph::GraphBatch& batch);
BaselineEnergy estimate_energy_baseline(const model::ModelConfig& cfg, const graph::GraphBatch& batch,
                                        const EnergyConfig& energy = {});
BaselineEnergy estimate_energy_baseline(const model::BaselineTransformer& model, const graph::GraphBatch& batch,
                                        const EnergyConfig& energy = {});

// Sets baseline_total_mj and ratio on `report`.
void attach_baseline(EnergyReport& report, const BaselineEnergy& baseline);

// Problems with a serialized report (missing fields, wrong types, sops
// that disagree with fire_rate · flops, line items not summing to the total).
std::vector<std::string> validate_report_json(const nlohmann::json& j);

}  // namespace sghormer::energy
