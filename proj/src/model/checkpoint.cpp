#include "sghormer/model/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sghormer/errors.hpp"

namespace sghormer::model {

using nlohmann::json;

Checkpoint capture(const GraphModel& model, json meta) {
  Checkpoint ckpt;
  ckpt.model_kind = model.kind();
  ckpt.config = model.config();
  ckpt.meta = std::move(meta);
  for (const auto& p : model.parameters()) {
    auto d = p.tensor.data();
    ckpt.params[p.name] = StoredTensor{p.tensor.shape(), std::vector<float>(d.begin(), d.end())};
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json params = json::object();
  for (const auto& [name, t] : ckpt.params) params[name] = json{{"shape", t.shape}, {"data", t.data}};
  const json doc{{"format", kCheckpointFormat},
                 {"version", kCheckpointVersion},
                 {"model_kind", ckpt.model_kind},
                 {"config", to_json(ckpt.config)},
                 {"params", std::move(params)},
                 {"meta", ckpt.meta}};
  // Write then rename so a crash never leaves a truncated checkpoint behind.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << doc.dump();
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const GraphModel& model, json meta) {
  save_checkpoint(path, capture(model, std::move(meta)));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("format", std::string()) != kCheckpointFormat) {
    throw IncompatibleError("checkpoint " + path.string() + " has an unknown format");
  }
  if (!doc.contains("version") || !doc["version"].is_number_integer() ||
      doc["version"].get<int>() != kCheckpointVersion) {
    throw IncompatibleError("checkpoint version " + (doc.contains("version") ? doc["version"].dump() : "?") +
                            " is not supported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  try {
    ckpt.model_kind = doc.at("model_kind").get<std::string>();
    std::vector<std::string> errors;
    ckpt.config = model_config_from_json(doc.at("config"), errors);
    if (!errors.empty()) throw ParseError("checkpoint config: " + errors.front());
    for (const auto& [name, t] : doc.at("params").items()) {
      StoredTensor st{t.at("shape").get<ad::Shape>(), t.at("data").get<std::vector<float>>()};
      if (ad::numel_of(st.shape) != st.data.size()) throw ParseError("parameter " + name + " has inconsistent size");
      ckpt.params.emplace(name, std::move(st));
    }
    ckpt.meta = doc.value("meta", json::object());
  } catch (const json::exception& e) {
    throw ParseError("checkpoint " + path.string() + " is malformed: " + e.what());
  }
  return ckpt;
}

void restore(GraphModel& model, const Checkpoint& ckpt) {
  if (ckpt.model_kind != model.kind()) {
    throw IncompatibleError("checkpoint holds a " + ckpt.model_kind + " model, not " + model.kind());
  }
  if (!(ckpt.config == model.config())) {
    throw IncompatibleError("checkpoint config " + to_json(ckpt.config).dump() + " does not match model config " +
                            to_json(model.config()).dump());
  }
  const ParamList params = model.parameters();
  if (params.size() != ckpt.params.size()) {
    throw IncompatibleError("checkpoint has " + std::to_string(ckpt.params.size()) + " tensors, model has " +
                            std::to_string(params.size()));
  }
  for (const auto& p : params) {
    auto it = ckpt.params.find(p.name);
    if (it == ckpt.params.end()) throw IncompatibleError("checkpoint lacks parameter " + p.name);
    if (it->second.shape != p.tensor.shape()) {
      throw IncompatibleError("parameter " + p.name + " has shape " + ad::shape_str(it->second.shape) +
                              " in the checkpoint but " + ad::shape_str(p.tensor.shape()) + " in the model");
    }
  }
  for (const auto& p : params) {
    const auto& src = ckpt.params.at(p.name).data;
    Tensor dst = p.tensor;
    std::copy(src.begin(), src.end(), dst.data().begin());
  }
}

std::unique_ptr<GraphModel> model_from_checkpoint(const Checkpoint& ckpt) {
  auto cfg = ckpt.config;
  auto model = make_model(ckpt.model_kind, cfg);
  restore(*model, ckpt);
  return model;
}

}  // namespace sghormer::model
