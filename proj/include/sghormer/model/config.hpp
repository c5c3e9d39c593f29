#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sghormer/blocks/attention.hpp"
#include "sghormer/neurons/neuron.hpp"

namespace sghormer::model {

enum class Task { graph_regression, graph_classification, node_classification };

Task task_from_string(const std::string& name);  // throws ConfigError
std::string to_string(Task task);
bool is_regression(Task task);
bool is_graph_level(Task task);

struct ModelConfig {
  std::size_t L = 3;
  std::size_t d = 64;
  std::size_t M = 4;
  std::size_t T = 4;
  std::size_t k = 4;  // Laplacian eigenvector columns
  std::size_t K = 8;  // random-walk steps
  Task task = Task::graph_regression;
  neurons::NeuronConfig neuron;
  bool use_srb = true;
  blocks::AttentionMode attention_mode = blocks::AttentionMode::first_step;
  float attn_scale = 0.0f;  // 0 means 1/(d/M)
  std::size_t smlp_depth = 1;
  bool residual = false;
  std::size_t in_dim = 4;
  std::size_t edge_dim = 0;
  std::size_t num_classes = 2;
  std::uint64_t seed = 0;

  std::size_t encoder_in() const { return in_dim + k + K; }
  std::size_t out_dim() const { return is_regression(task) ? 1 : num_classes; }
  blocks::AttentionConfig attention() const;

  bool operator==(const ModelConfig&) const = default;
};

// All problems at once; empty when valid.
std::vector<std::string> validate(const ModelConfig& cfg);

nlohmann::json to_json(const ModelConfig& cfg);
// Missing keys keep their defaults; bad values are appended to `errors`.
ModelConfig model_config_from_json(const nlohmann::json& j, std::vector<std::string>& errors);

}  // namespace sghormer::model
