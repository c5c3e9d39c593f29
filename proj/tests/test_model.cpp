#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"
#include "sghormer/graph/encodings.hpp"
#include "sghormer/graph/synthetic.hpp"
#include "sghormer/model/attention_export.hpp"
#include "sghormer/model/checkpoint.hpp"
#include "sghormer/model/model.hpp"
#include "test_util.hpp"

using namespace sghormer;
using namespace sghormer::model;
using graph::Graph;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.L = 2;
  cfg.d = 16;
  cfg.M = 2;
  cfg.T = 4;
  cfg.seed = 3;
  return cfg;
}

graph::Dataset graphs(std::size_t n, std::uint64_t seed, std::size_t min_nodes = 10, std::size_t max_nodes = 14) {
  graph::SyntheticSpec spec;
  spec.num_graphs = n;
  spec.seed = seed;
  spec.min_nodes = min_nodes;
  spec.max_nodes = max_nodes;
  return graph::gen_synthetic(spec);
}

graph::GraphBatch encode(const graph::Dataset& data, const ModelConfig& cfg) {
  return graph::batch_with_encodings(data, cfg.k, cfg.K);
}

std::vector<float> eval(const GraphModel& m, const graph::GraphBatch& b, Trace* trace = nullptr) {
  Context ctx;
  ctx.trace = trace;
  const Tensor out = m.forward(b, ctx);
  return {out.data().begin(), out.data().end()};
}

// Train-mode passes without gradients so the norms' running statistics
// match the data; a fresh model evaluated on (0, 1) statistics barely fires.
void warm_up(const GraphModel& m, const graph::GraphBatch& b, int passes = 200) {
  ad::NoGradGuard guard;
  std::mt19937_64 rng(123);
  Context ctx;
  ctx.mode = Mode::train;
  ctx.rng = &rng;
  for (int i = 0; i < passes; ++i) m.forward(b, ctx);
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "sghormer_test_model";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Graph random_tree(std::mt19937_64& rng, std::size_t n) {
  Graph g;
  g.num_nodes = n;
  for (std::uint32_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::uint32_t> parent(0, v - 1);
    const std::uint32_t p = parent(rng);
    g.edges.push_back({p, v});
    g.edges.push_back({v, p});
  }
  g.node_dim = 4;
  std::normal_distribution<float> z;
  for (std::size_t i = 0; i < n * 4; ++i) g.node_feats.push_back(z(rng));
  g.label = 0.0;
  return g;
}

// Simple spectrum and a unique largest entry in every used eigenvector,
// so the encodings are defined without sign or rotation ambiguity.
bool unambiguous(const Graph& g, std::size_t k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(graph::normalized_laplacian(g));
  const auto& ev = es.eigenvalues();
  for (Eigen::Index i = 0; i + 1 < ev.size(); ++i)
    if (ev(i + 1) - ev(i) < 1e-4) return false;
  for (Eigen::Index c = 1; c <= static_cast<Eigen::Index>(k); ++c) {
    std::vector<double> mags;
    for (Eigen::Index i = 0; i < ev.size(); ++i) mags.push_back(std::abs(es.eigenvectors()(i, c)));
    std::sort(mags.rbegin(), mags.rend());
    if (mags[0] - mags[1] < 1e-4) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config validation reports every problem") {
  ModelConfig cfg;
  CHECK(validate(cfg).empty());
  cfg.M = 5;
  cfg.T = 0;
  cfg.L = 0;
  const auto errors = validate(cfg);
  CHECK(errors.size() >= 3);
  try {
    SGHormer m(cfg);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("M") != std::string::npos);
    CHECK(msg.find("T") != std::string::npos);
    CHECK(msg.find("L") != std::string::npos);
  }
}

TEST_CASE("config json round-trips and flags unknown keys") {
  ModelConfig cfg = small_config();
  cfg.task = Task::node_classification;
  cfg.neuron.kind = neurons::NeuronKind::PLIF;
  cfg.attention_mode = blocks::AttentionMode::satt;
  std::vector<std::string> errors;
  CHECK(model_config_from_json(to_json(cfg), errors) == cfg);
  CHECK(errors.empty());

  auto j = to_json(cfg);
  j["bogus"] = 1;
  j["d"] = "wide";
  j["neuron"]["kind"] = "XYZ";
  model_config_from_json(j, errors);
  CHECK(errors.size() == 3);
}

TEST_CASE("sghormer output shapes") {
  const auto cfg = small_config();
  SGHormer m(cfg);
  const auto data = graphs(3, 1);
  const auto b = encode(data, cfg);
  Context ctx;
  const Tensor out = m.forward(b, ctx);
  CHECK(out.shape() == ad::Shape{3, 1});

  auto node_cfg = cfg;
  node_cfg.task = Task::node_classification;
  node_cfg.num_classes = 3;
  SGHormer node_model(node_cfg);
  CHECK(node_model.forward(b, ctx).shape() == ad::Shape{b.num_nodes(), 3});

  BaselineTransformer base(cfg);
  CHECK(base.forward(b, ctx).shape() == out.shape());
}

TEST_CASE("width mismatch is a dimension error") {
  auto cfg = small_config();
  cfg.in_dim = 5;
  SGHormer m(cfg);
  const auto b = encode(graphs(2, 1), cfg);
  Context ctx;
  CHECK_THROWS_AS(m.forward(b, ctx), DimensionError);
  auto cfg2 = small_config();
  const auto b2 = graph::batch_with_encodings(graphs(2, 1), 2, cfg2.K);
  CHECK_THROWS_AS(SGHormer(cfg2).forward(b2, ctx), DimensionError);
}

TEST_CASE("spike tensors at every seam are binary") {
  auto cfg = small_config();
  SGHormer m(cfg);
  const auto b = encode(graphs(4, 2), cfg);
  Trace trace;
  eval(m, b, &trace);
  CHECK(trace.forward_ran);
  CHECK(trace.spikes.size() >= 1 + cfg.L * 5);
  for (const auto& r : trace.spikes) {
    CAPTURE(r.where);
    CHECK(neurons::is_binary(r.spikes));
  }
}

TEST_CASE("eval forward is deterministic and seeded") {
  const auto cfg = small_config();
  const auto b = encode(graphs(4, 5), cfg);
  SGHormer a(cfg), c(cfg);
  CHECK(eval(a, b) == eval(a, b));
  CHECK(eval(a, b) == eval(c, b));
  auto other = cfg;
  other.seed = 4;
  CHECK(eval(SGHormer(other), b) != eval(a, b));
}

TEST_CASE("disabling the rectify block changes the outputs") {
  auto cfg = small_config();
  const auto b = encode(graphs(6, 5), cfg);
  auto off = cfg;
  off.use_srb = false;
  SGHormer with(cfg), without(off);
  warm_up(with, b);
  warm_up(without, b);
  CHECK(eval(with, b) != eval(without, b));
}

TEST_CASE("graph predictions are invariant to node relabelling") {
  auto cfg = small_config();
  cfg.k = 3;
  cfg.K = 4;
  SGHormer m(cfg);
  BaselineTransformer base(cfg);
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 8; ++trial) {
    Graph g = random_tree(rng, 8 + trial % 5);
    if (!unambiguous(g, cfg.k)) continue;
    std::vector<std::uint32_t> perm(g.num_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Graph h = g;
    for (auto& e : h.edges) e = {perm[e[0]], perm[e[1]]};
    for (std::size_t i = 0; i < g.num_nodes; ++i)
      for (std::size_t c = 0; c < 4; ++c) h.node_feats[perm[i] * 4 + c] = g.node_feats[i * 4 + c];
    const std::vector<Graph> one{g}, other{h};
    const auto pg = eval(m, encode(one, cfg)), ph = eval(m, encode(other, cfg));
    CHECK(std::abs(pg[0] - ph[0]) < 1e-4);
    const auto bg = eval(base, encode(one, cfg)), bh = eval(base, encode(other, cfg));
    CHECK(std::abs(bg[0] - bh[0]) < 1e-4);
    ++checked;
  }
  CHECK(checked >= 5);
}

TEST_CASE("perturbing one graph leaves the others' predictions untouched") {
  const auto cfg = small_config();
  SGHormer m(cfg);
  BaselineTransformer base(cfg);
  auto data = graphs(2, 9);
  warm_up(m, encode(data, cfg));
  warm_up(base, encode(data, cfg));
  const auto before = eval(m, encode(data, cfg));
  const auto base_before = eval(base, encode(data, cfg));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> z(0.0f, 3.0f);
  for (auto& v : data[1].node_feats) v = z(rng);
  data[1].edges.resize(data[1].edges.size() / 2);
  const auto after = eval(m, encode(data, cfg));
  const auto base_after = eval(base, encode(data, cfg));
  CHECK(before[0] == after[0]);
  CHECK(base_before[0] == base_after[0]);
  CHECK(before[1] != after[1]);
}

TEST_CASE("gradients reach every spiking parameter family") {
  auto cfg = small_config();
  cfg.L = 1;
  cfg.d = 32;
  SGHormer m(cfg);
  const auto data = graphs(8, 4);
  const auto b = encode(data, cfg);
  std::vector<float> target;
  for (const auto& g : data) target.push_back(static_cast<float>(std::get<double>(g.label)));
  std::mt19937_64 rng(1);
  Context ctx;
  ctx.mode = Mode::train;
  ctx.rng = &rng;
  m.zero_grad();
  ad::backward(ad::l1_loss(m.forward(b, ctx), std::span<const float>(target)));
  for (const std::string name : {"layers.0.attn.q.linear.weight", "layers.0.attn.k.linear.weight",
                                 "layers.0.attn.v.linear.weight", "layers.0.attn.q.noise_weight",
                                 "layers.0.attn.v.noise_weight", "layers.0.mpnn.w", "encoder.linear.weight"}) {
    CAPTURE(name);
    const auto params = m.parameters();
    const auto it = std::ranges::find(params, name, &blocks::NamedTensor::name);
    REQUIRE(it != params.end());
    REQUIRE(it->tensor.has_grad());
    CHECK(std::ranges::any_of(it->tensor.grad(), [](float g) { return g != 0.0f; }));
  }
}

TEST_CASE("baseline attention rows are distributions within each graph") {
  const auto cfg = small_config();
  BaselineTransformer base(cfg);
  const auto data = graphs(1, 3);
  Trace trace;
  eval(base, encode(data, cfg), &trace);
  REQUIRE(trace.attention.size() == 1);
  const std::size_t n = data[0].num_nodes;
  const auto& a = trace.attention[0];
  REQUIRE(a.size() == n * n);
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += a[i * n + j];
    CHECK(row == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("baseline attention on a single node and with equal logits") {
  const auto cfg = small_config();
  BaselineTransformer base(cfg);
  Graph single;
  single.num_nodes = 1;
  single.node_dim = 4;
  single.node_feats = {0.1f, 0.2f, 0.3f, 0.4f};
  single.label = 1.0;
  Trace trace;
  eval(base, encode(graph::Dataset{single}, cfg), &trace);
  CHECK(trace.attention.at(0) == std::vector<float>{1.0f});

  // Zero query projection: every logit is 0, so every row is uniform.
  auto params = base.parameters();
  for (auto& p : params)
    if (p.name == "layers.0.q.weight" || p.name == "layers.0.q.bias")
      std::fill(p.tensor.data().begin(), p.tensor.data().end(), 0.0f);
  const auto data = graphs(1, 8);
  trace.clear();
  eval(base, encode(data, cfg), &trace);
  const std::size_t n = data[0].num_nodes;
  for (float v : trace.attention.at(0)) CHECK(v == doctest::Approx(1.0 / n).epsilon(1e-6));
}

TEST_CASE("pearson correlation") {
  CHECK(*pearson({1, 2, 3, 5}, {1, 2, 3, 5}) == doctest::Approx(1.0));
  CHECK(*pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
  CHECK_FALSE(pearson({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_THROWS_AS(pearson({1}, {1, 2}), DimensionError);
}

TEST_CASE("attention export shapes and bounds") {
  auto cfg = small_config();
  SGHormer m(cfg);
  BaselineTransformer base(cfg);
  const auto data = graphs(1, 12, 10, 10);
  const auto exp = export_attention(m, base, encode(data, cfg));
  CHECK(exp.num_nodes == 10);
  REQUIRE(exp.spiking.size() == 1);
  const float dh = static_cast<float>(cfg.d / cfg.M);
  for (float v : exp.spiking[0]) {
    CHECK(v >= 0.0f);
    CHECK(v <= dh);
    CHECK(v == std::floor(v));
  }
  for (float v : exp.mask) CHECK((v == 0.0f || v == 1.0f));
  const auto j = exp.to_json();
  CHECK(j["spiking_attn"].size() == 1);
  CHECK(j["spiking_attn"][0].size() == 10);
  CHECK(j["spiking_attn"][0][0].size() == 10);
  CHECK(j["baseline_attn"].size() == 10);
  CHECK(j.contains("pearson_r"));

  cfg.attention_mode = blocks::AttentionMode::satt;
  SGHormer satt(cfg);
  CHECK(export_attention(satt, base, encode(data, cfg)).spiking.size() == cfg.T);

  CHECK_THROWS_AS(export_attention(m, base, encode(graphs(2, 1), cfg)), ContractError);
}

TEST_CASE("checkpoint round-trip reproduces eval outputs exactly") {
  for (const std::string kind : {"sghormer", "baseline"}) {
    CAPTURE(kind);
    const auto cfg = small_config();
    auto model = make_model(kind, cfg);
    const auto b = encode(graphs(5, 2), cfg);
    // Move running statistics away from their initial values first.
    std::mt19937_64 rng(2);
    Context train;
    train.mode = Mode::train;
    train.rng = &rng;
    {
      ad::NoGradGuard guard;
      model->forward(b, train);
    }
    const auto before = eval(*model, b);
    const auto path = temp_path(kind + ".json");
    save_checkpoint(path, *model, {{"epoch", 3}});
    const auto ckpt = load_checkpoint(path);
    CHECK(ckpt.meta["epoch"] == 3);
    const auto restored = model_from_checkpoint(ckpt);
    CHECK(eval(*restored, b) == before);
  }
}

TEST_CASE("checkpoint errors leave the model untouched") {
  const auto cfg = small_config();
  SGHormer m(cfg);
  const auto path = temp_path("ckpt.json");
  save_checkpoint(path, m);

  const auto corrupt = temp_path("corrupt.json");
  {
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), {});
    std::ofstream(corrupt) << text.substr(0, text.size() / 2);
  }
  CHECK_THROWS_AS(load_checkpoint(corrupt), ParseError);
  CHECK_THROWS_AS(load_checkpoint(temp_path("missing.json")), ParseError);

  auto ckpt = load_checkpoint(path);
  auto other_cfg = cfg;
  other_cfg.d = 32;
  SGHormer other(other_cfg);
  CHECK_THROWS_AS(restore(other, ckpt), IncompatibleError);
  CHECK_THROWS_AS(restore(*make_model("baseline", cfg), ckpt), IncompatibleError);

  // A bad shape is found before any tensor is written.
  SGHormer target(cfg);
  const auto b = encode(graphs(3, 1), cfg);
  const auto reference = eval(target, b);
  ckpt = capture(SGHormer([] {
    auto c = small_config();
    c.seed = 99;
    return c;
  }()));
  ckpt.params.rbegin()->second.shape = {1};
  CHECK_THROWS_AS(restore(target, ckpt), IncompatibleError);
  CHECK(eval(target, b) == reference);

  nlohmann::json doc;
  {
    std::ifstream in(path);
    doc = nlohmann::json::parse(in);
  }
  doc["version"] = 99;
  const auto future = temp_path("future.json");
  std::ofstream(future) << doc.dump();
  CHECK_THROWS_AS(load_checkpoint(future), IncompatibleError);
}

TEST_CASE("check_finite names the block that produced a NaN") {
  auto cfg = small_config();
  SGHormer m(cfg);
  m.layer(1).smlp.linear(0).bias().data()[0] = std::numeric_limits<float>::quiet_NaN();
  const auto b = encode(graphs(2, 1), cfg);
  Context ctx;
  ctx.check_finite = true;
  try {
    m.forward(b, ctx);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("'smlp' in layer 1") != std::string::npos);
  }
}
