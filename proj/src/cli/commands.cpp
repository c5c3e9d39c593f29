#include "sghormer/cli/commands.hpp"

#include <fstream>
#include <ostream>

#include "sghormer/cli/trainer.hpp"
#include "sghormer/errors.hpp"
#include "sghormer/graph/encodings.hpp"
#include "sghormer/graph/io.hpp"
#include "sghormer/graph/synthetic.hpp"
#include "sghormer/model/attention_export.hpp"
#include "sghormer/model/checkpoint.hpp"

namespace sghormer::cli {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Model from the checkpoint when given, otherwise freshly initialized from cfg.
std::unique_ptr<model::GraphModel> load_or_build(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) return model::make_model(cfg.model_kind, cfg.model);
  return model::model_from_checkpoint(model::load_checkpoint(cfg.checkpoint));
}

std::unique_ptr<model::SGHormer> spiking_model(const RunConfig& cfg, const char* command) {
  auto m = load_or_build(cfg);
  if (m->kind() != "sghormer") {
    throw ConfigError(std::string(command) + " needs an sghormer model, got " + m->kind());
  }
  return std::unique_ptr<model::SGHormer>(static_cast<model::SGHormer*>(m.release()));
}

}  // namespace

json run_gen_data(const RunConfig& cfg) {
  if (cfg.data.synthetic.empty()) throw ConfigError("gen-data needs a synthetic spec (kind:n:seed)");
  const auto spec = graph::parse_synthetic_spec(cfg.data.synthetic);
  const auto data = graph::gen_synthetic(spec);
  const auto path = cfg.out / (graph::to_string(spec.kind) + ".jsonl");
  std::filesystem::create_directories(cfg.out);
  graph::save_jsonl(path, data);
  return {{"command", "gen-data"}, {"path", path.string()}, {"graphs", data.size()}};
}

json run_train(const RunConfig& cfg, std::ostream* progress) {
  const auto data = load_data(cfg.data);
  std::filesystem::create_directories(cfg.out);
  write_json(cfg.out / "config.json", to_json(cfg));
  const auto result = train(cfg, data, cfg.out, progress);
  json summary{{"command", "train"},
               {"epochs", result.log.size()},
               {"metric", metric_name(cfg.model.task)},
               {"best_epoch", result.best.meta["epoch"]},
               {"best_eval_metric", result.best.meta["eval_metric"]},
               {"checkpoint", (cfg.out / "checkpoint.json").string()}};
  if (!result.log.empty()) summary["final_train_loss"] = result.log.back().train_loss;
  return summary;
}

json run_eval(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw ConfigError("eval needs a checkpoint (--checkpoint)");
  const auto ckpt = model::load_checkpoint(cfg.checkpoint);
  const auto m = model::model_from_checkpoint(ckpt);
  const auto& mcfg = ckpt.config;
  const auto data = load_data(cfg.data);
  check_compatible(data, mcfg);

  const Split split = split_indices(data.size(), cfg.data.eval_fraction, mcfg.seed);
  const PreparedData all = prepare(data, mcfg);
  const PreparedData eval_set = split.eval.empty() ? all : all.subset(split.eval);
  const double value = evaluate(*m, eval_set, scale_from_meta(ckpt.meta), cfg.optimizer.batch_size);

  json report{{"command", "eval"},
              {"checkpoint", cfg.checkpoint},
              {"model_kind", ckpt.model_kind},
              {"task", model::to_string(mcfg.task)},
              {"metric", metric_name(mcfg.task)},
              {"value", value},
              {"graphs", eval_set.size()}};
  write_json(cfg.out / "eval_report.json", report);
  return report;
}

graph::Dataset profile_graphs(const graph::Dataset& data, std::size_t nodes) {
  graph::Dataset out;
  std::size_t covered = 0;
  for (const auto& g : data) {
    if (covered >= nodes) break;
    out.push_back(g);
    covered += g.num_nodes;
  }
  if (out.empty()) throw ConfigError("profile needs at least one graph");
  return out;
}

Profile profile(const RunConfig& cfg, const graph::Dataset& data) {
  const auto m = spiking_model(cfg, "profile");
  const auto& mcfg = m->config();
  check_compatible(data, mcfg);
  const auto graphs = profile_graphs(data, cfg.profile_nodes);
  const auto batch = graph::batch_with_encodings(graphs, mcfg.k, mcfg.K);
  Profile p;
  p.report = energy::estimate_energy(*m, batch);
  p.baseline = energy::estimate_energy_baseline(mcfg, batch);
  energy::attach_baseline(p.report, p.baseline);
  p.graphs = graphs.size();
  p.nodes = batch.num_nodes();
  return p;
}

json run_profile(const RunConfig& cfg, bool csv) {
  const auto p = profile(cfg, load_data(cfg.data));
  json j = p.report.to_json();
  j["baseline"] = {{"flops", p.baseline.flops.to_json()},
                   {"total_pj", p.baseline.total_pj},
                   {"total_mj", p.baseline.total_mj}};
  j["batch"] = {{"graphs", p.graphs}, {"nodes", p.nodes}};
  write_json(cfg.out / "energy_report.json", j);
  if (csv) write_text(cfg.out / "energy_report.csv", p.report.to_csv());
  return {{"command", "profile"},
          {"total_mj", p.report.total_mj},
          {"baseline_total_mj", p.baseline.total_mj},
          {"ratio", *p.report.ratio},
          {"nodes", p.nodes}};
}

json run_export_attention(const RunConfig& cfg) {
  const auto m = spiking_model(cfg, "export-attention");
  const auto& mcfg = m->config();
  const auto data = load_data(cfg.data);
  if (cfg.export_graph >= data.size()) {
    throw ConfigError("export_graph " + std::to_string(cfg.export_graph) + " is out of range for " +
                      std::to_string(data.size()) + " graphs");
  }
  check_compatible(data, mcfg);
  const std::vector<graph::Graph> one{data[cfg.export_graph]};
  const auto batch = graph::batch_with_encodings(one, mcfg.k, mcfg.K);
  const model::BaselineTransformer baseline(mcfg);
  const auto exported = model::export_attention(*m, baseline, batch);
  json j = exported.to_json();
  j["graph"] = cfg.export_graph;
  write_json(cfg.out / "attention.json", j);
  return {{"command", "export-attention"},
          {"num_nodes", exported.num_nodes},
          {"pearson_r", exported.pearson_r ? json(*exported.pearson_r) : json(nullptr)}};
}

json run_command(const RunConfig& cfg, bool csv, std::ostream* progress) {
  if (cfg.command == "gen-data") return run_gen_data(cfg);
  if (cfg.command == "train") return run_train(cfg, progress);
  if (cfg.command == "eval") return run_eval(cfg);
  if (cfg.command == "profile") return run_profile(cfg, csv);
  if (cfg.command == "export-attention") return run_export_attention(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

Sweep parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw ConfigError("--sweep " + text + ": expected key=v1,v2,...");
  }
  Sweep s;
  s.key = text.substr(0, eq);
  std::size_t start = eq + 1;
  while (true) {
    const auto comma = text.find(',', start);
    const std::string v = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (v.empty()) throw ConfigError("--sweep " + text + ": empty value");
    s.values.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return s;
}

std::string sweep_dir_name(const std::string& key, const std::string& value) {
  std::string name = key + "=" + value;
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ':' || c == ' ') c = '_';
  }
  return name;
}

}  // namespace sghormer::cli
