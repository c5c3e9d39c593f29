#include "sghormer/energy/energy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "sghormer/errors.hpp"
#include "sghormer/neurons/spike_train.hpp"

namespace sghormer::energy {

using nlohmann::json;

namespace {

const std::vector<std::string> kBlocks{"srb", "mpnn", "attn"};

std::uint64_t round_sops(double rate, std::uint64_t flops) {
  return static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(flops)));
}

double sum_items(const std::vector<std::pair<std::string, double>>& items) {
  double total = 0.0;
  for (const auto& [name, pj] : items) total += pj;
  return total;
}

}  // namespace

void validate(const EnergyConfig& cfg) {
  if (!(cfg.alpha_f > 0.0) || !(cfg.alpha_s > 0.0)) {
    throw ConfigError("energy factors must be positive (alpha_f=" + std::to_string(cfg.alpha_f) +
                      ", alpha_s=" + std::to_string(cfg.alpha_s) + ")");
  }
}

std::uint64_t count_flops_linear(std::size_t in_dim, std::size_t out_dim, std::size_t rows) {
  if (in_dim == 0 || out_dim == 0 || rows == 0) throw ContractError("count_flops_linear: dimensions must be positive");
  return static_cast<std::uint64_t>(rows) * in_dim * out_dim;
}

double measure_fire_rate(const ad::Tensor& spikes) { return neurons::fire_rate(spikes); }

std::uint64_t EnergyReport::total_sops() const {
  std::uint64_t total = 0;
  for (const auto& r : records) total += r.sops;
  return total;
}

double EnergyReport::mean_fire_rate() const {
  double flops = 0.0, sops = 0.0;
  for (const auto& r : records) {
    flops += static_cast<double>(r.flops);
    sops += r.fire_rate * static_cast<double>(r.flops);
  }
  return flops > 0.0 ? sops / flops : 0.0;
}

json EnergyReport::to_json() const {
  json recs = json::array();
  for (const auto& r : records) {
    recs.push_back({{"t", r.t},
                    {"layer", r.layer},
                    {"block", r.block},
                    {"op", r.op},
                    {"flops", r.flops},
                    {"fire_rate", r.fire_rate},
                    {"sops", r.sops}});
  }
  json items = json::array();
  for (const auto& [name, pj] : line_items) items.push_back({{"name", name}, {"pj", pj}});
  return json{{"units", {{"energy", "pJ per operation; totals in mJ"}, {"pj_to_mj", kPicoToMilli}}},
              {"conventions",
               {{"mac", "1 multiply-accumulate = 1 FLOP"},
                {"softmax_flops_per_entry", kSoftmaxFlopsPerEntry},
                {"sops", "round(fire_rate * flops) per record"},
                {"fire_rate", "fraction of ones in the block's input spikes"},
                {"excluded", "positional/structural encoding preprocessing and the readout head"}}},
              {"alpha_f", config.alpha_f},
              {"alpha_s", config.alpha_s},
              {"flop_coding", flop_coding},
              {"records", std::move(recs)},
              {"line_items", std::move(items)},
              {"total_sops", total_sops()},
              {"total_pj", total_pj},
              {"total_mj", total_mj},
              {"baseline_total_mj", baseline_total_mj ? json(*baseline_total_mj) : json(nullptr)},
              {"ratio", ratio ? json(*ratio) : json(nullptr)}};
}

std::string EnergyReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "t,layer,block,op,flops,fire_rate,sops\n";
  for (const auto& r : records) {
    out << r.t << ',' << r.layer << ',' << r.block << ',' << r.op << ',' << r.flops << ',' << r.fire_rate << ','
        << r.sops << '\n';
  }
  return out.str();
}

EnergyReport estimate_energy(const blocks::Trace& trace, const EnergyConfig& cfg) {
  validate(cfg);
  if (!trace.forward_ran) throw ContractError("estimate_energy: no instrumented forward pass was recorded");
  EnergyReport report;
  report.config = cfg;
  report.flop_coding = trace.coding_flops;
  std::map<std::string, std::uint64_t> sops_by_block;
  for (const auto& op : trace.ops) {
    if (op.fire_rate < 0.0 || op.fire_rate > 1.0) {
      throw ContractError("estimate_energy: fire rate " + std::to_string(op.fire_rate) + " outside [0, 1]");
    }
    BlockRecord r{op.t, op.layer, op.block, op.op, op.flops, op.fire_rate, round_sops(op.fire_rate, op.flops)};
    sops_by_block[r.block] += r.sops;
    report.records.push_back(std::move(r));
  }
  report.line_items.emplace_back("coding", cfg.alpha_f * static_cast<double>(report.flop_coding));
  for (const auto& b : kBlocks) report.line_items.emplace_back(b, cfg.alpha_s * static_cast<double>(sops_by_block[b]));
  for (const auto& [b, sops] : sops_by_block) {
    if (std::find(kBlocks.begin(), kBlocks.end(), b) == kBlocks.end()) {
      report.line_items.emplace_back(b, cfg.alpha_s * static_cast<double>(sops));
    }
  }
  report.total_pj = sum_items(report.line_items);
  report.total_mj = report.total_pj * kPicoToMilli;
  return report;
}

EnergyReport estimate_energy(const model::SGHormer& model, const graph::GraphBatch& batch, const EnergyConfig& cfg) {
  ad::NoGradGuard no_grad;
  blocks::Trace trace;
  blocks::Context ctx;
  ctx.mode = blocks::Mode::eval;
  ctx.trace = &trace;
  model.forward(batch, ctx);
  return estimate_energy(trace, cfg);
}

json BaselineFlops::to_json() const {
  return json{{"coding", coding}, {"qkv_proj", qkv_proj}, {"scores", scores}, {"softmax", softmax},
              {"attn_v", attn_v}, {"mpnn", mpnn},         {"mlp", mlp},       {"total", total()}};
}

BaselineFlops count_baseline_flops(const model::ModelConfig& cfg, const graph::GraphBatch& batch) {
  const std::uint64_t n = batch.num_nodes(), e = batch.num_edges(), d = cfg.d;
  std::uint64_t block_entries = 0;
  for (std::size_t g = 0; g < batch.num_graphs(); ++g) block_entries += batch.layout.size(g) * batch.layout.size(g);
  BaselineFlops f;
  f.coding = n * cfg.encoder_in() * d;
  for (std::size_t l = 0; l < cfg.L; ++l) {
    f.qkv_proj += 3 * n * d * d;
    f.scores += block_entries * d;
    f.softmax += kSoftmaxFlopsPerEntry * cfg.M * block_entries;
    f.attn_v += block_entries * d;
    f.mpnn += n * d * d + e * d + e * cfg.edge_dim * d;
    f.mlp += n * d * d;
  }
  return f;
}

BaselineEnergy estimate_energy_baseline(const model::ModelConfig& cfg, const graph::GraphBatch& batch,
                                        const EnergyConfig& energy) {
  validate(energy);
  BaselineEnergy out;
  out.flops = count_baseline_flops(cfg, batch);
  out.total_pj = energy.alpha_f * static_cast<double>(out.flops.total());
  out.total_mj = out.total_pj * kPicoToMilli;
  return out;
}

BaselineEnergy estimate_energy_baseline(const model::BaselineTransformer& model, const graph::GraphBatch& batch,
                                        const EnergyConfig& energy) {
  model::node_inputs(batch, model.config());  // width check only
  return estimate_energy_baseline(model.config(), batch, energy);
}

void attach_baseline(EnergyReport& report, const BaselineEnergy& baseline) {
  report.baseline_total_mj = baseline.total_mj;
  report.ratio = report.total_mj > 0.0 ? std::optional<double>(baseline.total_mj / report.total_mj) : std::nullopt;
}

std::vector<std::string> validate_report_json(const json& j) {
  std::vector<std::string> errors;
  if (!j.is_object()) return {"report is not a JSON object"};
  const auto need = [&](const char* key, auto pred, const char* what) {
    if (!j.contains(key)) {
      errors.push_back(std::string("missing field '") + key + "'");
      return false;
    }
    if (!pred(j[key])) {
      errors.push_back(std::string("field '") + key + "' must be " + what);
      return false;
    }
    return true;
  };
  const auto is_num = [](const json& v) { return v.is_number(); };
  const auto is_uint = [](const json& v) { return v.is_number_unsigned(); };
  const auto is_arr = [](const json& v) { return v.is_array(); };
  const auto num_or_null = [](const json& v) { return v.is_number() || v.is_null(); };
  need("alpha_f", is_num, "a number");
  need("alpha_s", is_num, "a number");
  need("flop_coding", is_uint, "a non-negative integer");
  need("total_pj", is_num, "a number");
  need("total_mj", is_num, "a number");
  need("baseline_total_mj", num_or_null, "a number or null");
  need("ratio", num_or_null, "a number or null");
  const bool have_records = need("records", is_arr, "an array");
  const bool have_items = need("line_items", is_arr, "an array");
  if (!errors.empty()) return errors;

  for (std::size_t i = 0; have_records && i < j["records"].size(); ++i) {
    const auto& r = j["records"][i];
    const std::string where = "records[" + std::to_string(i) + "]";
    bool ok = r.is_object();
    for (const char* key : {"t", "layer", "flops", "sops"}) ok = ok && r.contains(key) && r[key].is_number_unsigned();
    ok = ok && r.contains("fire_rate") && r["fire_rate"].is_number();
    ok = ok && r.contains("block") && r["block"].is_string() && r.contains("op") && r["op"].is_string();
    if (!ok) {
      errors.push_back(where + " is missing or mistypes a field");
      continue;
    }
    const double rate = r["fire_rate"].get<double>();
    const auto flops = r["flops"].get<std::uint64_t>(), sops = r["sops"].get<std::uint64_t>();
    if (rate < 0.0 || rate > 1.0) errors.push_back(where + " has fire_rate outside [0, 1]");
    if (sops > flops) errors.push_back(where + " has more SOPs than FLOPs");
    if (sops != round_sops(rate, flops)) errors.push_back(where + " sops != round(fire_rate * flops)");
  }
  if (have_items) {
    std::vector<std::pair<std::string, double>> items;
    for (const auto& it : j["line_items"]) {
      if (!it.is_object() || !it.contains("pj") || !it["pj"].is_number()) {
        errors.push_back("line_items entries need a numeric 'pj'");
        return errors;
      }
      items.emplace_back(it.value("name", std::string()), it["pj"].get<double>());
    }
    if (sum_items(items) != j["total_pj"].get<double>()) errors.push_back("line_items do not sum to total_pj");
  }
  if (j["total_mj"].get<double>() != j["total_pj"].get<double>() * kPicoToMilli) {
    errors.push_back("total_mj is not total_pj * 1e-9");
  }
  return errors;
}

}  // namespace sghormer::energy
