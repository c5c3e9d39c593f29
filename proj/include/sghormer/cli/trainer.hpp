#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "sghormer/cli/run_config.hpp"
#include "sghormer/graph/graph.hpp"
#include "sghormer/model/checkpoint.hpp"
#include "sghormer/model/model.hpp"

namespace sghormer::cli {

// Graphs with their encodings computed once.
struct PreparedData {
  graph::Dataset graphs;
  std::vector<graph::Encodings> encodings;

  std::size_t size() const { return graphs.size(); }
  PreparedData subset(std::span<const std::size_t> index) const;
  graph::GraphBatch batch(std::span<const std::size_t> index) const;
  graph::GraphBatch batch_all() const;
};

graph::Dataset load_data(const DataConfig& cfg);
PreparedData prepare(graph::Dataset graphs, const model::ModelConfig& cfg);

// Throws ConfigError when labels or feature widths do not fit the model.
void check_compatible(const graph::Dataset& data, const model::ModelConfig& cfg);

// Seeded shuffle; the first round(n · eval_fraction) indices go to eval
// (at least one graph stays in train).
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};
Split split_indices(std::size_t n, double eval_fraction, std::uint64_t seed);

// Regression targets are standardized with the training split's statistics.
struct TargetScale {
  double mean = 0.0;
  double std = 1.0;
};
TargetScale fit_scale(const PreparedData& train, const model::ModelConfig& cfg);
TargetScale scale_from_meta(const nlohmann::json& meta);

std::string metric_name(model::Task task);
// Lower MAE or higher accuracy.
bool metric_better(model::Task task, double candidate, double incumbent);

// Eval-mode outputs in label units, concatenated over batches of `batch_size` graphs.
std::vector<float> predict(const model::GraphModel& m, const PreparedData& data, const TargetScale& scale,
                           std::size_t batch_size);
// MAE for regression, accuracy (graph or node level) otherwise.
double evaluate(const model::GraphModel& m, const PreparedData& data, const TargetScale& scale,
                std::size_t batch_size);

// MAE of always predicting the mean training label.
double mean_predictor_mae(const PreparedData& train, const PreparedData& eval);

struct EpochRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_metric = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRow> log;
  model::Checkpoint best;  // initialization when no epoch ran
  TargetScale scale;
  Split split;
};

// Trains cfg.model_kind on `data`. When `out_dir` is non-empty, metrics.csv
// grows by one row per epoch and checkpoint.json tracks the best epoch.
// Throws NumericError naming the first block with a non-finite output when
// the loss stops being finite.
TrainResult train(const RunConfig& cfg, const graph::Dataset& data, const std::filesystem::path& out_dir = {},
                  std::ostream* progress = nullptr);

std::string metrics_csv_header();
std::string metrics_csv_row(const EpochRow& row);

}  // namespace sghormer::cli
