// sghormer command-line entry point.
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sghormer/cli/commands.hpp"
#include "sghormer/cli/run_config.hpp"
#include "sghormer/errors.hpp"

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::string data;
  std::string synthetic;
  std::string checkpoint;
  std::string seed;
  std::string sweep;
  bool csv = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON run config");
  cmd->add_option("--set", o.sets, "dotted override key=value (repeatable)")->take_all();
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--data", o.data, "JSONL dataset");
  cmd->add_option("--synthetic", o.synthetic, "synthetic dataset kind:n:seed");
  cmd->add_option("--seed", o.seed, "seed for init, split, shuffling and noise");
  cmd->add_option("--sweep", o.sweep, "run once per value: key=v1,v2,...");
  cmd->add_flag("--quiet", o.quiet, "no progress output");
}

std::string quoted(const std::string& key, const std::string& value) {
  return key + "=" + nlohmann::json(value).dump();
}

std::vector<std::string> overrides(const Options& o) {
  std::vector<std::string> out = o.sets;
  if (!o.out.empty()) out.push_back(quoted("out", o.out));
  if (!o.data.empty()) out.push_back(quoted("data.path", o.data));
  if (!o.synthetic.empty()) out.push_back(quoted("data.synthetic", o.synthetic));
  if (!o.checkpoint.empty()) out.push_back(quoted("checkpoint", o.checkpoint));
  if (!o.seed.empty()) out.push_back("seed=" + o.seed);
  return out;
}

int run(const std::string& command, const Options& o) {
  namespace cli = sghormer::cli;
  std::ostream* progress = o.quiet ? nullptr : &std::cerr;
  const auto base = overrides(o);
  if (o.sweep.empty()) {
    const auto cfg = cli::load_run_config(o.config, base, command);
    std::cout << cli::run_command(cfg, o.csv, progress).dump() << '\n';
    return 0;
  }
  const auto sweep = cli::parse_sweep(o.sweep);
  // Validate every point before running any of them.
  std::vector<cli::RunConfig> runs;
  for (const auto& v : sweep.values) {
    auto point = base;
    point.push_back(sweep.key + "=" + v);
    auto cfg = cli::load_run_config(o.config, point, command);
    cfg.out /= cli::sweep_dir_name(sweep.key, v);
    runs.push_back(std::move(cfg));
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    auto summary = cli::run_command(runs[i], o.csv, progress);
    summary["sweep"] = {{"key", sweep.key}, {"value", sweep.values[i]}, {"out", runs[i].out.string()}};
    std::cout << summary.dump() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking graph transformer: data, training, evaluation, energy profiling"};
  app.require_subcommand(1);

  Options o;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset as JSONL");
  gen->add_option("spec", o.synthetic, "kind:n:seed, e.g. degree_regression:100:7");
  auto* train = app.add_subcommand("train", "train a model; writes metrics.csv and checkpoint.json");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint; writes eval_report.json");
  auto* profile = app.add_subcommand("profile", "estimate energy against the baseline; writes energy_report.json");
  auto* exp = app.add_subcommand("export-attention", "dump attention matrices; writes attention.json");
  for (auto* cmd : {gen, train, eval, profile, exp}) add_common(cmd, o);
  for (auto* cmd : {eval, profile, exp}) cmd->add_option("--checkpoint", o.checkpoint, "checkpoint.json");
  profile->add_flag("--csv", o.csv, "also write energy_report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const sghormer::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}
