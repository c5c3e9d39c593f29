#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "sghormer/model/model.hpp"

namespace sghormer::model {

inline constexpr const char* kCheckpointFormat = "sghormer-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct StoredTensor {
  ad::Shape shape;
  std::vector<float> data;
};

// JSON container: format, version, model kind, config, named parameter
// arrays (including normalization running statistics) and free-form meta.
struct Checkpoint {
  std::string model_kind = "sghormer";
  ModelConfig config;
  std::map<std::string, StoredTensor> params;
  nlohmann::json meta = nlohmann::json::object();
};

Checkpoint capture(const GraphModel& model, nlohmann::json meta = nlohmann::json::object());

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const GraphModel& model,
                     nlohmann::json meta = nlohmann::json::object());

// Throws ParseError on unreadable or malformed files and IncompatibleError
// on a format/version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Copies stored parameters into `model`. Every name and shape is checked
// before anything is written; mismatches raise IncompatibleError.
void restore(GraphModel& model, const Checkpoint& ckpt);

std::unique_ptr<GraphModel> model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace sghormer::model
