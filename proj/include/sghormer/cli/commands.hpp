#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "sghormer/cli/run_config.hpp"
#include "sghormer/energy/energy.hpp"
#include "sghormer/graph/graph.hpp"

namespace sghormer::cli {

// Every command writes only below cfg.out and returns a JSON summary.

// Writes <out>/<kind>.jsonl from cfg.data.synthetic.
nlohmann::json run_gen_data(const RunConfig& cfg);

// metrics.csv, checkpoint.json and config.json.
nlohmann::json run_train(const RunConfig& cfg, std::ostream* progress = nullptr);

// Evaluates cfg.checkpoint on the held-out split of the data (the whole
// dataset when eval_fraction is 0). Writes eval_report.json. A dataset whose
// labels do not fit the checkpoint's task raises ConfigError.
nlohmann::json run_eval(const RunConfig& cfg);

// First graphs of the dataset until at least `nodes` nodes are covered.
graph::Dataset profile_graphs(const graph::Dataset& data, std::size_t nodes);

struct Profile {
  energy::EnergyReport report;  // matched baseline attached
  energy::BaselineEnergy baseline;
  std::size_t graphs = 0;
  std::size_t nodes = 0;
};

// Uses cfg.checkpoint when set, a fresh model from cfg.model otherwise.
Profile profile(const RunConfig& cfg, const graph::Dataset& data);

// energy_report.json, plus energy_report.csv when `csv` is set.
nlohmann::json run_profile(const RunConfig& cfg, bool csv = false);

// attention.json for dataset graph cfg.export_graph.
nlohmann::json run_export_attention(const RunConfig& cfg);

nlohmann::json run_command(const RunConfig& cfg, bool csv = false, std::ostream* progress = nullptr);

// "key=v1,v2,..." -> one override per value. Throws ConfigError when malformed.
struct Sweep {
  std::string key;
  std::vector<std::string> values;
};
Sweep parse_sweep(const std::string& text);

// Directory name for one sweep point, e.g. "model.T=8".
std::string sweep_dir_name(const std::string& key, const std::string& value);

}  // namespace sghormer::cli
