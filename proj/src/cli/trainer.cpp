#include "sghormer/cli/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/cli/optimizer.hpp"
#include "sghormer/errors.hpp"
#include "sghormer/graph/encodings.hpp"
#include "sghormer/graph/io.hpp"
#include "sghormer/graph/synthetic.hpp"

namespace sghormer::cli {

using model::Task;
using nlohmann::json;

namespace {

enum class Stream : std::uint64_t { split = 1, train = 2 };

std::mt19937_64 stream_rng(std::uint64_t seed, Stream s) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s)};
  return std::mt19937_64(seq);
}

double regression_label(const graph::Label& l) {
  if (const auto* d = std::get_if<double>(&l)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&l)) return static_cast<double>(*i);
  throw ConfigError("graph_regression needs a numeric label on every graph");
}

// Targets of one batch in training units.
struct Targets {
  std::vector<float> reals;
  std::vector<std::int64_t> classes;
};

Targets batch_targets(const graph::GraphBatch& b, Task task, const TargetScale& scale) {
  Targets t;
  for (const auto& l : b.labels) {
    switch (task) {
      case Task::graph_regression:
        t.reals.push_back(static_cast<float>((regression_label(l) - scale.mean) / scale.std));
        break;
      case Task::graph_classification: t.classes.push_back(std::get<std::int64_t>(l)); break;
      case Task::node_classification: {
        const auto& v = std::get<std::vector<std::int64_t>>(l);
        t.classes.insert(t.classes.end(), v.begin(), v.end());
        break;
      }
    }
  }
  return t;
}

ad::Tensor loss_of(const ad::Tensor& out, const Targets& t, Task task) {
  if (model::is_regression(task)) return ad::l1_loss(out, std::span<const float>(t.reals));
  return ad::cross_entropy(out, std::span<const std::int64_t>(t.classes));
}

std::vector<std::size_t> iota_n(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

json history_json(const std::vector<EpochRow>& log) {
  json h = json::array();
  for (const auto& r : log) h.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"eval_metric", r.eval_metric}});
  return h;
}

}  // namespace

PreparedData PreparedData::subset(std::span<const std::size_t> index) const {
  PreparedData out;
  for (std::size_t i : index) {
    out.graphs.push_back(graphs.at(i));
    out.encodings.push_back(encodings.at(i));
  }
  return out;
}

graph::GraphBatch PreparedData::batch(std::span<const std::size_t> index) const {
  std::vector<graph::Graph> g;
  std::vector<graph::Encodings> e;
  g.reserve(index.size());
  e.reserve(index.size());
  for (std::size_t i : index) {
    g.push_back(graphs.at(i));
    e.push_back(encodings.at(i));
  }
  return graph::batch(g, e);
}

graph::GraphBatch PreparedData::batch_all() const { return graph::batch(graphs, encodings); }

graph::Dataset load_data(const DataConfig& cfg) {
  if (!cfg.path.empty()) return graph::load_jsonl(cfg.path);
  return graph::gen_synthetic(graph::parse_synthetic_spec(cfg.synthetic));
}

PreparedData prepare(graph::Dataset graphs, const model::ModelConfig& cfg) {
  PreparedData out;
  out.encodings = graph::compute_encodings(graphs, cfg.k, cfg.K);
  out.graphs = std::move(graphs);
  return out;
}

void check_compatible(const graph::Dataset& data, const model::ModelConfig& cfg) {
  std::vector<std::string> errors;
  for (std::size_t i = 0; i < data.size() && errors.size() < 5; ++i) {
    const auto& g = data[i];
    const std::string where = "graph " + std::to_string(i) + ": ";
    if (g.node_dim != cfg.in_dim) {
      errors.push_back(where + std::to_string(g.node_dim) + " node features but model.in_dim is " +
                       std::to_string(cfg.in_dim));
    }
    if (!g.edges.empty() && g.edge_dim != cfg.edge_dim) {
      errors.push_back(where + std::to_string(g.edge_dim) + " edge features but model.edge_dim is " +
                       std::to_string(cfg.edge_dim));
    }
    const std::string task = "task mismatch for " + model::to_string(cfg.task) + ": ";
    switch (cfg.task) {
      case Task::graph_regression:
        if (!std::holds_alternative<double>(g.label) && !std::holds_alternative<std::int64_t>(g.label)) {
          errors.push_back(where + task + "needs a numeric graph label");
        }
        break;
      case Task::graph_classification: {
        const auto* c = std::get_if<std::int64_t>(&g.label);
        if (!c || *c < 0 || static_cast<std::size_t>(*c) >= cfg.num_classes) {
          errors.push_back(where + task + "needs an integer class in [0, model.num_classes)");
        }
        break;
      }
      case Task::node_classification: {
        const auto* v = std::get_if<std::vector<std::int64_t>>(&g.label);
        bool ok = v && v->size() == g.num_nodes;
        for (std::size_t j = 0; ok && j < v->size(); ++j) {
          ok = (*v)[j] >= 0 && static_cast<std::size_t>((*v)[j]) < cfg.num_classes;
        }
        if (!ok) errors.push_back(where + task + "needs one class in [0, model.num_classes) per node");
        break;
      }
    }
  }
  if (errors.empty()) return;
  std::string msg = "dataset does not fit the model:";
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

Split split_indices(std::size_t n, double eval_fraction, std::uint64_t seed) {
  auto order = iota_n(n);
  auto rng = stream_rng(seed, Stream::split);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(n) * eval_fraction));
  if (eval_fraction < 1.0 && n > 0) n_eval = std::min(n_eval, n - 1);
  Split s;
  s.eval.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_eval));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_eval), order.end());
  std::sort(s.eval.begin(), s.eval.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

TargetScale fit_scale(const PreparedData& train, const model::ModelConfig& cfg) {
  TargetScale s;
  if (!model::is_regression(cfg.task) || train.size() == 0) return s;
  double sum = 0.0, sq = 0.0;
  for (const auto& g : train.graphs) sum += regression_label(g.label);
  s.mean = sum / static_cast<double>(train.size());
  for (const auto& g : train.graphs) sq += std::pow(regression_label(g.label) - s.mean, 2);
  const double var = sq / static_cast<double>(train.size());
  s.std = var > 1e-12 ? std::sqrt(var) : 1.0;
  return s;
}

TargetScale scale_from_meta(const json& meta) {
  TargetScale s;
  s.mean = meta.value("target_mean", 0.0);
  s.std = meta.value("target_std", 1.0);
  return s;
}

std::string metric_name(Task task) { return model::is_regression(task) ? "mae" : "accuracy"; }

bool metric_better(Task task, double candidate, double incumbent) {
  return model::is_regression(task) ? candidate < incumbent : candidate > incumbent;
}

std::vector<float> predict(const model::GraphModel& m, const PreparedData& data, const TargetScale& scale,
                           std::size_t batch_size) {
  ad::NoGradGuard no_grad;
  std::vector<float> out;
  const auto order = iota_n(data.size());
  const bool regression = model::is_regression(m.config().task);
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    const auto b = data.batch(std::span(order).subspan(start, end - start));
    model::Context ctx;
    const ad::Tensor y = m.forward(b, ctx);
    for (float v : y.data()) out.push_back(regression ? static_cast<float>(v * scale.std + scale.mean) : v);
  }
  return out;
}

double evaluate(const model::GraphModel& m, const PreparedData& data, const TargetScale& scale,
                std::size_t batch_size) {
  const auto& cfg = m.config();
  if (data.size() == 0) return 0.0;
  const auto y = predict(m, data, scale, batch_size);
  if (model::is_regression(cfg.task)) {
    double err = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) err += std::abs(y[i] - regression_label(data.graphs[i].label));
    return err / static_cast<double>(data.size());
  }
  const std::size_t c = cfg.num_classes;
  std::vector<std::int64_t> truth;
  for (const auto& g : data.graphs) {
    if (cfg.task == Task::graph_classification) {
      truth.push_back(std::get<std::int64_t>(g.label));
    } else {
      const auto& v = std::get<std::vector<std::int64_t>>(g.label);
      truth.insert(truth.end(), v.begin(), v.end());
    }
  }
  if (truth.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    const auto row = y.begin() + static_cast<std::ptrdiff_t>(r * c);
    const auto best = std::max_element(row, row + static_cast<std::ptrdiff_t>(c)) - row;
    correct += best == truth[r];
  }
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

double mean_predictor_mae(const PreparedData& train, const PreparedData& eval) {
  if (train.size() == 0 || eval.size() == 0) throw ContractError("mean_predictor_mae: empty split");
  double mean = 0.0;
  for (const auto& g : train.graphs) mean += regression_label(g.label);
  mean /= static_cast<double>(train.size());
  double err = 0.0;
  for (const auto& g : eval.graphs) err += std::abs(regression_label(g.label) - mean);
  return err / static_cast<double>(eval.size());
}

std::string metrics_csv_header() { return "epoch,train_loss,eval_metric,wall_seconds\n"; }

std::string metrics_csv_row(const EpochRow& row) {
  std::ostringstream out;
  out.precision(9);
  out << row.epoch << ',' << row.train_loss << ',' << row.eval_metric << ',';
  out.precision(4);
  out << std::fixed << row.wall_seconds << '\n';
  return out.str();
}

TrainResult train(const RunConfig& cfg, const graph::Dataset& data, const std::filesystem::path& out_dir,
                  std::ostream* progress) {
  const auto& mcfg = cfg.model;
  check_compatible(data, mcfg);
  if (data.empty()) throw ConfigError("training needs at least one graph");
  auto model = model::make_model(cfg.model_kind, mcfg);
  const Task task = mcfg.task;

  TrainResult result;
  result.split = split_indices(data.size(), cfg.data.eval_fraction, mcfg.seed);
  const PreparedData all = prepare(data, mcfg);
  const PreparedData train_set = all.subset(result.split.train);
  // Without held-out graphs the training split doubles as the eval split.
  const PreparedData eval_set = result.split.eval.empty() ? train_set : all.subset(result.split.eval);
  result.scale = fit_scale(train_set, mcfg);

  const auto make_meta = [&](std::size_t epoch, std::optional<double> metric) {
    return json{{"epoch", epoch},
                {"metric", metric_name(task)},
                {"eval_metric", metric ? json(*metric) : json(nullptr)},
                {"target_mean", result.scale.mean},
                {"target_std", result.scale.std},
                {"history", history_json(result.log)}};
  };
  result.best = model::capture(*model, make_meta(0, std::nullopt));

  std::ofstream metrics;
  const bool write = !out_dir.empty();
  if (write) {
    std::filesystem::create_directories(out_dir);
    metrics.open(out_dir / "metrics.csv", std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
    metrics << metrics_csv_header() << std::flush;
    model::save_checkpoint(out_dir / "checkpoint.json", result.best);
  }

  AdamW opt(model->trainable(), {.lr = cfg.optimizer.lr, .weight_decay = cfg.optimizer.weight_decay});
  auto rng = stream_rng(mcfg.seed, Stream::train);
  auto order = iota_n(train_set.size());
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<double> best_metric;

  for (std::size_t epoch = 1; epoch <= cfg.optimizer.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.optimizer.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.optimizer.batch_size);
      const auto b = train_set.batch(std::span(order).subspan(start, end - start));
      const Targets targets = batch_targets(b, task, result.scale);
      const auto rng_before = rng;
      model::Context ctx;
      ctx.mode = model::Mode::train;
      ctx.rng = &rng;
      ctx.check_finite = cfg.check_finite;
      const ad::Tensor loss = loss_of(model->forward(b, ctx), targets, task);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        ad::Tape::current().clear();
        // Replay the batch with per-block checks to name the culprit.
        auto replay_rng = rng_before;
        ctx.rng = &replay_rng;
        ctx.check_finite = true;
        const std::string where = "epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(start / cfg.optimizer.batch_size + 1);
        try {
          ad::NoGradGuard no_grad;
          model->forward(b, ctx);
        } catch (const NumericError& e) {
          throw NumericError("loss is not finite at " + where + ": " + e.what());
        }
        throw NumericError("loss is not finite at " + where + " although every block output is finite");
      }
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      loss_sum += value * static_cast<double>(end - start);
      seen += end - start;
    }
    const double metric = evaluate(*model, eval_set, result.scale, cfg.optimizer.batch_size);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(seen, 1)), metric, wall});
    if (write) metrics << metrics_csv_row(result.log.back()) << std::flush;
    if (progress) *progress << metrics_csv_row(result.log.back()) << std::flush;
    if (!best_metric || metric_better(task, metric, *best_metric)) {
      best_metric = metric;
      result.best = model::capture(*model, make_meta(epoch, metric));
      if (write) model::save_checkpoint(out_dir / "checkpoint.json", result.best);
    }
  }
  if (write && !result.log.empty()) {
    // Final history travels with the best checkpoint.
    result.best.meta["history"] = history_json(result.log);
    model::save_checkpoint(out_dir / "checkpoint.json", result.best);
  }
  return result;
}

}  // namespace sghormer::cli
