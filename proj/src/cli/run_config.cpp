#include "sghormer/cli/run_config.hpp"

#include <algorithm>
#include <fstream>

#include "sghormer/errors.hpp"
#include "sghormer/graph/synthetic.hpp"

namespace sghormer::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kCommands{"gen-data", "train", "eval", "profile", "export-attention"};

void check_keys(const json& j, const std::vector<std::string>& known, const std::string& prefix,
                std::vector<std::string>& errors) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) errors.push_back(prefix + key + ": unknown key");
  }
}

template <typename F>
void read(const json& j, const std::string& key, const std::string& path, std::vector<std::string>& errors,
          F&& assign) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  try {
    assign(v);
  } catch (const std::exception& e) {
    errors.push_back(path + key + ": " + e.what() + " (got " + v.dump() + ")");
  }
}

std::size_t count(const json& v) {
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("expected a non-negative integer");
  return v.get<std::size_t>();
}

double real(const json& v) {
  if (!v.is_number()) throw ConfigError("expected a number");
  return v.get<double>();
}

std::string text(const json& v) {
  if (!v.is_string()) throw ConfigError("expected a string");
  return v.get<std::string>();
}

bool needs_data(const std::string& command) { return command != "gen-data"; }

// A synthetic source implies its task unless model.task is given.
void infer_task(json& doc) {
  if (!doc.contains("data") || !doc["data"].is_object()) return;
  const json& d = doc["data"];
  if (!d.contains("synthetic") || !d["synthetic"].is_string()) return;
  if (doc.contains("model") && doc["model"].is_object() && doc["model"].contains("task")) return;
  graph::SyntheticSpec spec;
  try {
    spec = graph::parse_synthetic_spec(d["synthetic"].get<std::string>());
  } catch (const std::exception&) {
    return;  // reported by validate()
  }
  if (!doc.contains("model") || !doc["model"].is_object()) doc["model"] = json::object();
  doc["model"]["task"] =
      spec.kind == graph::SyntheticKind::two_community ? "node_classification" : "graph_regression";
}

}  // namespace

json to_json(const RunConfig& cfg) {
  return json{{"command", cfg.command},
              {"model_kind", cfg.model_kind},
              {"seed", cfg.model.seed},
              {"model", model::to_json(cfg.model)},
              {"optimizer",
               {{"lr", cfg.optimizer.lr},
                {"weight_decay", cfg.optimizer.weight_decay},
                {"epochs", cfg.optimizer.epochs},
                {"batch_size", cfg.optimizer.batch_size}}},
              {"data",
               {{"path", cfg.data.path}, {"synthetic", cfg.data.synthetic}, {"eval_fraction", cfg.data.eval_fraction}}},
              {"out", cfg.out.string()},
              {"checkpoint", cfg.checkpoint},
              {"profile_nodes", cfg.profile_nodes},
              {"export_graph", cfg.export_graph},
              {"check_finite", cfg.check_finite}};
}

RunConfig run_config_from_json(const json& j, std::vector<std::string>& errors) {
  RunConfig cfg;
  if (!j.is_object()) {
    errors.push_back("config: expected a JSON object");
    return cfg;
  }
  check_keys(j,
             {"command", "model_kind", "seed", "model", "optimizer", "data", "out", "checkpoint", "profile_nodes",
              "export_graph", "check_finite"},
             "", errors);
  read(j, "command", "", errors, [&](const json& v) { cfg.command = text(v); });
  read(j, "model_kind", "", errors, [&](const json& v) { cfg.model_kind = text(v); });
  if (j.contains("model")) cfg.model = model::model_config_from_json(j["model"], errors);
  read(j, "seed", "", errors, [&](const json& v) { cfg.model.seed = count(v); });
  read(j, "out", "", errors, [&](const json& v) { cfg.out = text(v); });
  read(j, "checkpoint", "", errors, [&](const json& v) { cfg.checkpoint = text(v); });
  read(j, "profile_nodes", "", errors, [&](const json& v) { cfg.profile_nodes = count(v); });
  read(j, "export_graph", "", errors, [&](const json& v) { cfg.export_graph = count(v); });
  read(j, "check_finite", "", errors, [&](const json& v) {
    if (!v.is_boolean()) throw ConfigError("expected true or false");
    cfg.check_finite = v.get<bool>();
  });
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    if (!o.is_object()) {
      errors.push_back("optimizer: expected an object");
    } else {
      check_keys(o, {"lr", "weight_decay", "epochs", "batch_size"}, "optimizer.", errors);
      read(o, "lr", "optimizer.", errors, [&](const json& v) { cfg.optimizer.lr = real(v); });
      read(o, "weight_decay", "optimizer.", errors, [&](const json& v) { cfg.optimizer.weight_decay = real(v); });
      read(o, "epochs", "optimizer.", errors, [&](const json& v) { cfg.optimizer.epochs = count(v); });
      read(o, "batch_size", "optimizer.", errors, [&](const json& v) { cfg.optimizer.batch_size = count(v); });
    }
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    if (!d.is_object()) {
      errors.push_back("data: expected an object");
    } else {
      check_keys(d, {"path", "synthetic", "eval_fraction"}, "data.", errors);
      read(d, "path", "data.", errors, [&](const json& v) { cfg.data.path = text(v); });
      read(d, "synthetic", "data.", errors, [&](const json& v) { cfg.data.synthetic = text(v); });
      read(d, "eval_fraction", "data.", errors, [&](const json& v) { cfg.data.eval_fraction = real(v); });
    }
  }
  return cfg;
}

void apply_override(json& doc, const std::string& assignment, std::vector<std::string>& errors) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    errors.push_back("--set " + assignment + ": expected key=value");
    return;
  }
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) {
      errors.push_back("--set " + assignment + ": empty key segment");
      return;
    }
    if (!node->is_object()) {
      errors.push_back("--set " + assignment + ": '" + key.substr(0, start - 1) + "' is not an object");
      return;
    }
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> errors;
  if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end()) {
    errors.push_back("command '" + cfg.command + "' is not one of gen-data, train, eval, profile, export-attention");
  }
  if (cfg.model_kind != "sghormer" && cfg.model_kind != "baseline") {
    errors.push_back("model_kind must be sghormer or baseline");
  }
  for (const auto& e : model::validate(cfg.model)) errors.push_back(e);
  if (!(cfg.optimizer.lr > 0.0)) errors.push_back("optimizer.lr must be positive");
  if (cfg.optimizer.weight_decay < 0.0) errors.push_back("optimizer.weight_decay must be non-negative");
  if (cfg.optimizer.batch_size < 1) errors.push_back("optimizer.batch_size must be at least 1");
  if (!(cfg.data.eval_fraction >= 0.0 && cfg.data.eval_fraction <= 1.0)) {
    errors.push_back("data.eval_fraction must lie in [0, 1]");
  }
  if (cfg.command == "train" && cfg.data.eval_fraction >= 1.0) {
    errors.push_back("data.eval_fraction must leave graphs for training");
  }
  if (needs_data(cfg.command)) {
    if (cfg.data.path.empty() == cfg.data.synthetic.empty()) {
      errors.push_back("exactly one of data.path (--data) and data.synthetic (--synthetic) must be given");
    }
  }
  if (!cfg.data.synthetic.empty()) {
    try {
      graph::parse_synthetic_spec(cfg.data.synthetic);
    } catch (const std::exception& e) {
      errors.push_back(std::string("data.synthetic: ") + e.what());
    }
  }
  if (cfg.out.empty()) errors.push_back("out must name a directory");
  if (cfg.command == "profile" && cfg.profile_nodes < 1) errors.push_back("profile_nodes must be at least 1");
  return errors;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides,
                          const std::string& command) {
  json doc = json::object();
  std::vector<std::string> errors;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(doc, o, errors);
  if (!command.empty()) doc["command"] = command;
  if (doc.is_object()) infer_task(doc);
  RunConfig cfg = run_config_from_json(doc, errors);
  for (auto& e : validate(cfg)) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

}  // namespace sghormer::cli
