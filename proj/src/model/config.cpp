#include "sghormer/model/config.hpp"

#include <algorithm>

#include "sghormer/errors.hpp"

namespace sghormer::model {

using nlohmann::json;

Task task_from_string(const std::string& name) {
  if (name == "graph_regression") return Task::graph_regression;
  if (name == "graph_classification") return Task::graph_classification;
  if (name == "node_classification") return Task::node_classification;
  throw ConfigError("unknown task '" + name +
                    "' (expected graph_regression, graph_classification or node_classification)");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::graph_regression: return "graph_regression";
    case Task::graph_classification: return "graph_classification";
    case Task::node_classification: return "node_classification";
  }
  return "?";
}

bool is_regression(Task task) { return task == Task::graph_regression; }
bool is_graph_level(Task task) { return task != Task::node_classification; }

blocks::AttentionConfig ModelConfig::attention() const {
  blocks::AttentionConfig a;
  a.d = d;
  a.heads = M;
  a.mode = attention_mode;
  a.attn_scale = attn_scale;
  a.use_srb = use_srb;
  a.neuron = neuron;
  return a;
}

std::vector<std::string> validate(const ModelConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.L < 1) errors.push_back("model.L must be at least 1");
  if (cfg.T < 1) errors.push_back("model.T must be at least 1");
  if (cfg.d < 1) errors.push_back("model.d must be at least 1");
  if (cfg.M < 1 || (cfg.d > 0 && cfg.d % cfg.M != 0)) {
    errors.push_back("model.M (" + std::to_string(cfg.M) + ") must divide model.d (" + std::to_string(cfg.d) + ")");
  }
  if (cfg.smlp_depth < 1 || cfg.smlp_depth > 2) errors.push_back("model.smlp_depth must be 1 or 2");
  if (cfg.attn_scale < 0.0f) errors.push_back("model.attn_scale must be non-negative (0 selects 1/d')");
  if (cfg.encoder_in() == 0) errors.push_back("model.in_dim + k + K must be positive");
  if (!is_regression(cfg.task) && cfg.num_classes < 2) errors.push_back("model.num_classes must be at least 2");
  for (const auto& e : neurons::validate(cfg.neuron)) errors.push_back("model.neuron: " + e);
  return errors;
}

json to_json(const ModelConfig& cfg) {
  return json{{"L", cfg.L},
              {"d", cfg.d},
              {"M", cfg.M},
              {"T", cfg.T},
              {"k", cfg.k},
              {"K", cfg.K},
              {"task", to_string(cfg.task)},
              {"neuron",
               {{"kind", neurons::to_string(cfg.neuron.kind)},
                {"beta", cfg.neuron.beta},
                {"v_th", cfg.neuron.v_th},
                {"v_reset", cfg.neuron.v_reset},
                {"surrogate_width", cfg.neuron.surrogate_width}}},
              {"use_srb", cfg.use_srb},
              {"attention_mode", blocks::to_string(cfg.attention_mode)},
              {"attn_scale", cfg.attn_scale},
              {"smlp_depth", cfg.smlp_depth},
              {"residual", cfg.residual},
              {"in_dim", cfg.in_dim},
              {"edge_dim", cfg.edge_dim},
              {"num_classes", cfg.num_classes},
              {"seed", cfg.seed}};
}

namespace {

template <typename F>
void read_key(const json& j, const std::string& key, const std::string& path, std::vector<std::string>& errors,
              F&& assign) {
  if (!j.contains(key)) return;
  try {
    assign(j.at(key));
  } catch (const std::exception& e) {
    errors.push_back(path + key + ": " + e.what());
  }
}

std::size_t as_count(const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("expected a non-negative integer");
  return v.get<std::size_t>();
}

float as_real(const json& v) {
  if (!v.is_number()) throw ConfigError("expected a number");
  return v.get<float>();
}

bool as_bool(const json& v) {
  if (!v.is_boolean()) throw ConfigError("expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v) {
  if (!v.is_string()) throw ConfigError("expected a string");
  return v.get<std::string>();
}

}  // namespace

ModelConfig model_config_from_json(const json& j, std::vector<std::string>& errors) {
  ModelConfig cfg;
  if (!j.is_object()) {
    errors.push_back("model: expected an object");
    return cfg;
  }
  static const std::vector<std::string> known{"L",           "d",          "M",        "T",      "k",
                                              "K",           "task",       "neuron",   "use_srb", "attention_mode",
                                              "attn_scale",  "smlp_depth", "residual", "in_dim", "edge_dim",
                                              "num_classes", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) errors.push_back("model." + key + ": unknown key");
  }
  const std::string p = "model.";
  read_key(j, "L", p, errors, [&](const json& v) { cfg.L = as_count(v); });
  read_key(j, "d", p, errors, [&](const json& v) { cfg.d = as_count(v); });
  read_key(j, "M", p, errors, [&](const json& v) { cfg.M = as_count(v); });
  read_key(j, "T", p, errors, [&](const json& v) { cfg.T = as_count(v); });
  read_key(j, "k", p, errors, [&](const json& v) { cfg.k = as_count(v); });
  read_key(j, "K", p, errors, [&](const json& v) { cfg.K = as_count(v); });
  read_key(j, "task", p, errors, [&](const json& v) { cfg.task = task_from_string(as_string(v)); });
  read_key(j, "use_srb", p, errors, [&](const json& v) { cfg.use_srb = as_bool(v); });
  read_key(j, "attention_mode", p, errors,
           [&](const json& v) { cfg.attention_mode = blocks::attention_mode_from_string(as_string(v)); });
  read_key(j, "attn_scale", p, errors, [&](const json& v) { cfg.attn_scale = as_real(v); });
  read_key(j, "smlp_depth", p, errors, [&](const json& v) { cfg.smlp_depth = as_count(v); });
  read_key(j, "residual", p, errors, [&](const json& v) { cfg.residual = as_bool(v); });
  read_key(j, "in_dim", p, errors, [&](const json& v) { cfg.in_dim = as_count(v); });
  read_key(j, "edge_dim", p, errors, [&](const json& v) { cfg.edge_dim = as_count(v); });
  read_key(j, "num_classes", p, errors, [&](const json& v) { cfg.num_classes = as_count(v); });
  read_key(j, "seed", p, errors, [&](const json& v) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("expected a non-negative integer");
    }
    cfg.seed = v.get<std::uint64_t>();
  });
  if (j.contains("neuron")) {
    const json& n = j.at("neuron");
    if (!n.is_object()) {
      errors.push_back("model.neuron: expected an object");
    } else {
      const std::string np = "model.neuron.";
      for (const auto& [key, _] : n.items()) {
        if (key != "kind" && key != "beta" && key != "v_th" && key != "v_reset" && key != "surrogate_width") {
          errors.push_back(np + key + ": unknown key");
        }
      }
      read_key(n, "kind", np, errors,
               [&](const json& v) { cfg.neuron.kind = neurons::neuron_kind_from_string(as_string(v)); });
      read_key(n, "beta", np, errors, [&](const json& v) { cfg.neuron.beta = as_real(v); });
      read_key(n, "v_th", np, errors, [&](const json& v) { cfg.neuron.v_th = as_real(v); });
      read_key(n, "v_reset", np, errors, [&](const json& v) { cfg.neuron.v_reset = as_real(v); });
      read_key(n, "surrogate_width", np, errors, [&](const json& v) { cfg.neuron.surrogate_width = as_real(v); });
    }
  }
  return cfg;
}

}  // namespace sghormer::model
