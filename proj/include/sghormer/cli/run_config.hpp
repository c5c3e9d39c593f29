#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "sghormer/model/config.hpp"

namespace sghormer::cli {

struct OptimizerConfig {
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  bool operator==(const OptimizerConfig&) const = default;
};

// Exactly one of path / synthetic ("kind:n:seed") is used.
struct DataConfig {
  std::string path;
  std::string synthetic;
  double eval_fraction = 0.2;
  bool operator==(const DataConfig&) const = default;
};

struct RunConfig {
  std::string command;
  std::string model_kind = "sghormer";
  model::ModelConfig model;
  OptimizerConfig optimizer;
  DataConfig data;
  std::filesystem::path out = "out";
  std::string checkpoint;          // input checkpoint for eval/profile/export-attention
  std::size_t profile_nodes = 50;  // profile batch: graphs are added until this many nodes
  std::size_t export_graph = 0;    // export-attention: dataset index of the graph
  bool check_finite = false;       // check every block output, not only after a NaN loss

  // Single seed for initialization, data split, shuffling and SRB noise.
  std::uint64_t seed() const { return model.seed; }
};

nlohmann::json to_json(const RunConfig& cfg);

// Missing keys keep their defaults; every unknown key and bad value is
// appended to `errors`. A top-level "seed" sets model.seed.
RunConfig run_config_from_json(const nlohmann::json& j, std::vector<std::string>& errors);

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
// possible and kept as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment, std::vector<std::string>& errors);

// All problems with a parsed config for its command; empty when runnable.
std::vector<std::string> validate(const RunConfig& cfg);

// Reads `path` (when non-empty), applies overrides, parses and validates.
// Throws ConfigError listing every problem.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                          const std::string& command);

}  // namespace sghormer::cli
