#include <algorithm>
#include <random>

#include "doctest.h"
#include "sghormer/autodiff/ops.hpp"
#include "sghormer/blocks/attention.hpp"
#include "sghormer/blocks/binary_matmul.hpp"
#include "sghormer/blocks/encoder.hpp"
#include "sghormer/blocks/mpnn.hpp"
#include "sghormer/blocks/smlp.hpp"
#include "sghormer/blocks/srb.hpp"
#include "sghormer/errors.hpp"
#include "test_util.hpp"

using namespace sghormer;
using namespace sghormer::blocks;
using testutil::make;
using testutil::random_tensor;

namespace {

Tensor random_binary(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double p = 0.5) {
  std::bernoulli_distribution bit(p);
  std::vector<float> v(rows * cols);
  for (auto& x : v) x = bit(rng) ? 1.0f : 0.0f;
  return Tensor({rows, cols}, std::move(v));
}

std::vector<std::int32_t> dense_int_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  std::vector<std::int32_t> c(p * r, 0);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t x = 0; x < q; ++x)
        c[i * r + j] += static_cast<std::int32_t>(a.data()[i * q + x]) * static_cast<std::int32_t>(b.data()[x * r + j]);
  return c;
}

void fill(Tensor& t, float v) { std::fill(t.data().begin(), t.data().end(), v); }

void set_identity(Tensor& w, float v) {
  fill(w, 0.0f);
  for (std::size_t i = 0; i < std::min(w.rows(), w.cols()); ++i) w.data()[i * w.cols() + i] = v;
}

bool all_binary(const Trace& trace) {
  return std::all_of(trace.spikes.begin(), trace.spikes.end(),
                     [](const SpikeRecord& r) { return neurons::is_binary(r.spikes); });
}

neurons::NeuronConfig lif() { return {}; }

}  // namespace

TEST_CASE("binary_matmul examples") {
  const auto eye = make({2, 2}, {1, 0, 0, 1});
  CHECK(binary_matmul(eye, eye, BlockMask::dense(2, 2)) == std::vector<std::int32_t>{1, 0, 0, 1});
  const auto a = make({2, 2}, {1, 0, 1, 1});
  const auto b = make({2, 2}, {1, 1, 0, 1});
  CHECK(binary_matmul(a, b, BlockMask::dense(2, 2)) == std::vector<std::int32_t>{1, 1, 1, 2});
}

TEST_CASE("binary_matmul matches dense integer matmul") {
  std::mt19937_64 rng(11);
  const auto a = random_binary(rng, 64, 64);
  const auto b = random_binary(rng, 64, 64);
  CHECK(binary_matmul(a, b, BlockMask::dense(64, 64)) == dense_int_matmul(a, b));

  std::uniform_int_distribution<std::size_t> dim(1, 128);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t p = dim(rng), q = dim(rng), r = dim(rng);
    const auto x = random_binary(rng, p, q, density(rng));
    const auto y = random_binary(rng, q, r, density(rng));
    REQUIRE(binary_matmul(x, y, BlockMask::dense(p, r)) == dense_int_matmul(x, y));
  }
}

TEST_CASE("binary_matmul zeroes entries outside the mask blocks") {
  std::mt19937_64 rng(3);
  const auto a = random_binary(rng, 5, 7, 0.7);
  const auto b = random_binary(rng, 7, 5, 0.7);
  ad::BlockLayout layout;
  layout.offsets = {0, 2, 5};
  const auto c = binary_matmul(a, b, BlockMask::square(layout));
  const auto full = dense_int_matmul(a, b);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const bool same = (i < 2) == (j < 2);
      CHECK(c[i * 5 + j] == (same ? full[i * 5 + j] : 0));
    }
}

TEST_CASE("binary_matmul rejects non-binary operands") {
  const auto a = make({1, 2}, {1, 0.5f});
  const auto b = make({2, 1}, {1, 1});
  CHECK_THROWS_AS(binary_matmul(a, b, BlockMask::dense(1, 1)), ContractError);
  CHECK_THROWS_AS(binary_matmul(b, b, BlockMask::dense(2, 1)), DimensionError);
}

TEST_CASE("binary_block_scores agrees with the float kernel forward and backward") {
  std::mt19937_64 rng(5);
  ad::BlockLayout layout;
  layout.offsets = {0, 3, 7};
  auto q1 = random_binary(rng, 7, 6);
  auto k1 = random_binary(rng, 7, 6);
  auto q2 = Tensor(q1.shape(), std::vector<float>(q1.data().begin(), q1.data().end()), true);
  auto k2 = Tensor(k1.shape(), std::vector<float>(k1.data().begin(), k1.data().end()), true);
  q1.set_requires_grad(true);
  k1.set_requires_grad(true);
  const auto fast = binary_block_scores(q1, k1, layout);
  const auto ref = ad::block_matmul_nt(q2, k2, layout);
  REQUIRE(fast.numel() == ref.numel());
  for (std::size_t i = 0; i < ref.numel(); ++i) CHECK(fast.data()[i] == ref.data()[i]);

  const auto weights = random_tensor(rng, fast.shape());
  // One tape replay covers both graphs; their inputs are disjoint.
  ad::backward(ad::add(ad::sum(ad::mul(fast, weights)), ad::sum(ad::mul(ref, weights))));
  for (std::size_t i = 0; i < q1.numel(); ++i) {
    CHECK(q1.grad()[i] == doctest::Approx(q2.grad()[i]).epsilon(1e-6));
    CHECK(k1.grad()[i] == doctest::Approx(k2.grad()[i]).epsilon(1e-6));
  }
}

TEST_CASE("stacked layout round-trips") {
  std::mt19937_64 rng(1);
  std::vector<Tensor> steps;
  for (int t = 0; t < 3; ++t) steps.push_back(random_binary(rng, 4, 2));
  const neurons::SpikeTrain train(steps);
  const auto stacked = stack_steps(train);
  CHECK(stacked.shape() == ad::Shape{12, 2});
  const auto back = unstack_steps(stacked, 3);
  for (std::size_t t = 0; t < 3; ++t) CHECK(std::ranges::equal(back.step(t).data(), steps[t].data()));
  CHECK(step_fire_rate(stacked, 3, 1) == doctest::Approx(neurons::fire_rate(steps[1])));
}

TEST_CASE("rate encoder quiescence and saturation") {
  std::mt19937_64 rng(2);
  RateEncoder enc(3, 4, lif(), rng);
  const auto x = random_tensor(rng, {5, 3});
  fill(enc.linear().weight(), 0.0f);
  fill(enc.linear().bias(), 0.0f);
  auto train = rate_encode(x, Tensor(), 6, enc);
  CHECK(train.time_steps() == 6);
  CHECK(train.fire_rate() == 0.0);

  // Constant current 2.0 with beta 0.5 reaches v_th = 1 every step.
  fill(enc.linear().bias(), 2.0f);
  train = rate_encode(x, Tensor(), 6, enc);
  CHECK(train.fire_rate() == 1.0);
}

TEST_CASE("rate encoder concatenates encodings and checks widths") {
  std::mt19937_64 rng(2);
  RateEncoder enc(3, 4, lif(), rng);
  const auto feat = random_tensor(rng, {5, 2});
  const auto pe = random_tensor(rng, {5, 1});
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  const auto train = rate_encode(feat, pe, 4, enc, ctx);
  CHECK(train.rows() == 5);
  CHECK(train.cols() == 4);
  CHECK(trace.coding_flops == 5u * 3u * 4u);
  CHECK_THROWS_AS(rate_encode(feat, Tensor(), 4, enc), DimensionError);
}

TEST_CASE("rate encoder firing rate is monotone in the pre-activation") {
  std::mt19937_64 rng(4);
  const std::size_t width = 64;
  RateEncoder enc(1, width, lif(), rng);
  fill(enc.linear().bias(), 0.0f);
  for (std::size_t j = 0; j < width; ++j) enc.linear().weight().data()[j] = -0.5f + 4.0f * j / width;
  const auto train = rate_encode(Tensor::full({1, 1}, 1.0f), Tensor(), 64, enc);
  const auto rate = train.rate();
  for (std::size_t j = 1; j < width; ++j) CHECK(rate.data()[j] >= rate.data()[j - 1]);
  CHECK(rate.data()[0] == 0.0f);
  CHECK(rate.data()[width - 1] == 1.0f);
}

TEST_CASE("spike statistics examples") {
  auto zero = spike_statistics(Tensor::zeros({4, 3}), 4);
  CHECK(std::ranges::all_of(zero.mean, [](float v) { return v == 0.0f; }));
  CHECK(std::ranges::all_of(zero.var, [](float v) { return v == 0.0f; }));

  const auto pattern = make({4, 1}, {1, 0, 1, 0});
  const auto st = spike_statistics(pattern, 4);
  CHECK(st.mean[0] == 0.5f);
  CHECK(st.var[0] == 0.25f);
}

TEST_CASE("spike statistics satisfy the binary variance identity") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::size_t> steps_dist(1, 16);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t steps = steps_dist(rng);
    const auto s = random_binary(rng, steps * 3, 5, density(rng));
    const auto st = spike_statistics(s, steps);
    for (std::size_t e = 0; e < st.mean.size(); ++e) {
      std::size_t ones = 0;
      for (std::size_t t = 0; t < steps; ++t) ones += s.data()[t * 15 + e] == 1.0f;
      const double mu = static_cast<double>(ones) / steps;
      REQUIRE(st.mean[e] == static_cast<float>(mu));
      REQUIRE(st.var[e] == static_cast<float>(mu * (1.0 - mu)));
      REQUIRE(st.mean[e] >= 0.0f);
      REQUIRE(st.mean[e] <= 1.0f);
    }
  }
}

TEST_CASE("SRB eval mode is deterministic and uses the mean") {
  std::mt19937_64 rng(9);
  SpikingRectifyBlock srb(6, 6, rng);
  const auto s = random_binary(rng, 4 * 5, 6);
  Context ctx;
  const auto a = srb.forward(s, 4, ctx);
  const auto b = srb.forward(s, 4, ctx);
  CHECK(std::ranges::equal(a.data(), b.data()));

  // Oracle: Norm(Linear(S - w * mean)) with fresh running stats (0, 1).
  const auto st = spike_statistics(s, 4);
  const auto& w = srb.linear().weight();
  const auto& bias = srb.linear().bias();
  const std::size_t per_step = 5 * 6;
  for (std::size_t r = 0; r < 20; ++r)
    for (std::size_t o = 0; o < 6; ++o) {
      double acc = bias.data()[o];
      for (std::size_t i = 0; i < 6; ++i) {
        const double x = s.data()[r * 6 + i] - 0.1 * st.mean[(r * 6 + i) % per_step];
        acc += x * w.data()[i * 6 + o];
      }
      CHECK(a.data()[r * 6 + o] == doctest::Approx(acc / std::sqrt(1.0 + 1e-5)).epsilon(1e-5));
    }
}

TEST_CASE("SRB training noise depends on the generator and detaches the sample") {
  std::mt19937_64 init(9);
  SpikingRectifyBlock srb(4, 4, init);
  std::mt19937_64 data_rng(1);
  const auto s = random_binary(data_rng, 3 * 6, 4);
  std::mt19937_64 r1(100), r2(100), r3(101);
  Context ctx;
  ctx.mode = Mode::train;
  CHECK_THROWS_AS(srb.forward(s, 3, ctx), ContractError);
  ctx.rng = &r1;
  const auto a = srb.forward(s, 3, ctx);
  ctx.rng = &r2;
  const auto b = srb.forward(s, 3, ctx);
  ctx.rng = &r3;
  const auto c = srb.forward(s, 3, ctx);
  CHECK(std::ranges::equal(a.data(), b.data()));
  CHECK_FALSE(std::ranges::equal(a.data(), c.data()));

  srb.noise_weight().zero_grad();
  ctx.rng = &r1;
  ad::backward(ad::sum(srb.forward(s, 3, ctx)));
  REQUIRE(srb.noise_weight().has_grad());
  ad::Tape::current().clear();
}

TEST_CASE("SRB without noise reduces to Norm(Linear(S))") {
  std::mt19937_64 rng(12);
  SpikingRectifyBlock srb(3, 5, rng, false);
  CHECK_FALSE(srb.noise_weight().defined());
  const auto s = random_binary(rng, 8, 3);
  Context ctx;
  const auto got = srb.forward(s, 2, ctx);
  const auto want = srb.norm().forward(srb.linear().forward(s), false);
  CHECK(std::ranges::equal(got.data(), want.data()));
  ParamList params;
  srb.collect("srb", params);
  CHECK(std::ranges::none_of(params, [](const NamedTensor& p) { return p.name == "srb.noise_weight"; }));
}

TEST_CASE("SRB records one rectify op per used step") {
  std::mt19937_64 rng(12);
  SpikingRectifyBlock srb(3, 3, rng);
  const auto s = random_binary(rng, 4 * 2, 3);
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  const auto out = srb.forward(s, 4, 1, ctx, "q");
  CHECK(out.rows() == 2);
  REQUIRE(trace.ops.size() == 1);
  CHECK(trace.ops[0].block == "srb");
  CHECK(trace.ops[0].op == "q/rectify");
  CHECK(trace.ops[0].flops == 6u);
  CHECK(trace.ops[0].fire_rate == doctest::Approx(step_fire_rate(s, 4, 0)));
}

TEST_CASE("attention config errors") {
  std::mt19937_64 rng(0);
  AttentionConfig cfg;
  cfg.d = 6;
  cfg.heads = 4;
  CHECK_THROWS_AS(SpikingAttention(cfg, rng), ConfigError);
  CHECK_THROWS_AS(attention_mode_from_string("softmax"), ConfigError);
  CHECK(attention_mode_from_string("satt") == AttentionMode::satt);
  cfg.heads = 3;
  CHECK(cfg.scale() == doctest::Approx(0.5));
}

TEST_CASE("attention with silent values is zero") {
  std::mt19937_64 rng(3);
  AttentionConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  SpikingAttention attn(cfg, rng);
  fill(attn.projection('v').linear().weight(), 0.0f);
  fill(attn.projection('v').linear().bias(), 0.0f);
  const auto s = random_binary(rng, 3 * 5, 8);
  const auto h = attn.forward(s, 3, ad::BlockLayout::single(5), {});
  CHECK(std::ranges::all_of(h.data(), [](float v) { return v == 0.0f; }));
}

TEST_CASE("attention modes coincide at T = 1") {
  AttentionConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  std::mt19937_64 r1(21), r2(21), data(22);
  SpikingAttention first(cfg, r1);
  cfg.mode = AttentionMode::satt;
  SpikingAttention satt(cfg, r2);
  const auto s = random_binary(data, 6, 8);
  const auto layout = ad::BlockLayout::single(6);
  CHECK(std::ranges::equal(first.forward(s, 1, layout, {}).data(), satt.forward(s, 1, layout, {}).data()));
}

TEST_CASE("identity spiking attention passes scaled values through") {
  std::mt19937_64 rng(5);
  AttentionConfig cfg;
  cfg.d = 2;
  cfg.heads = 1;
  cfg.use_srb = false;
  SpikingAttention attn(cfg, rng);
  for (char c : {'q', 'k'}) {
    set_identity(attn.projection(c).linear().weight(), 4.0f);
    fill(attn.projection(c).linear().bias(), 0.0f);
  }
  const auto s = make({2, 2}, {1, 0, 0, 1});
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  const auto h = attn.forward(s, 1, ad::BlockLayout::single(2), ctx);
  REQUIRE(trace.attention.size() == 1);
  CHECK(trace.attention[0] == std::vector<float>{1, 0, 0, 1});
  const auto& v = std::ranges::find(trace.spikes, std::string("attn/v"), &SpikeRecord::where)->spikes;
  for (std::size_t i = 0; i < 4; ++i) CHECK(h.data()[i] == 0.5f * v.data()[i]);
}

namespace {

// H^t = scale · A · V_sp^t per block, recomputed from the recorded spikes.
void check_attention_oracle(AttentionMode mode) {
  std::mt19937_64 rng(mode == AttentionMode::satt ? 41 : 40);
  AttentionConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.mode = mode;
  SpikingAttention attn(cfg, rng);
  const std::size_t steps = 3;
  ad::BlockLayout layout;
  layout.offsets = {0, 4, 7};
  const std::size_t n = 7, dh = 4;
  const auto s = random_binary(rng, steps * n, 8, 0.4);
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  const auto h = attn.forward(s, steps, layout, ctx);
  CHECK(all_binary(trace));

  const auto find = [&](const std::string& w) {
    return std::ranges::find(trace.spikes, w, &SpikeRecord::where)->spikes;
  };
  const auto q = find("attn/q"), k = find("attn/k"), v = find("attn/v");
  const std::size_t qk_steps = mode == AttentionMode::satt ? steps : 1;
  CHECK(q.rows() == qk_steps * n);
  CHECK(trace.attention.size() == qk_steps);

  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t ts = std::min(t, qk_steps - 1);
    for (std::size_t g = 0; g < 2; ++g)
      for (std::size_t i = layout.offsets[g]; i < layout.offsets[g + 1]; ++i)
        for (std::size_t m = 0; m < 2; ++m)
          for (std::size_t c = 0; c < dh; ++c) {
            double acc = 0.0;
            for (std::size_t j = layout.offsets[g]; j < layout.offsets[g + 1]; ++j) {
              int score = 0;
              for (std::size_t x = 0; x < dh; ++x)
                score += static_cast<int>(q.data()[(ts * n + i) * 8 + m * dh + x] *
                                          k.data()[(ts * n + j) * 8 + m * dh + x]);
              acc += score * v.data()[(t * n + j) * 8 + m * dh + c];
            }
            REQUIRE(h.data()[(t * n + i) * 8 + m * dh + c] == doctest::Approx(acc / dh).epsilon(1e-6));
          }
  }
}

}  // namespace

TEST_CASE("first_step attention reuses step-one scores at every step") {
  check_attention_oracle(AttentionMode::first_step);
}

TEST_CASE("satt attention recomputes scores at every step") { check_attention_oracle(AttentionMode::satt); }

TEST_CASE("attention never leaks across graphs in eval mode") {
  std::mt19937_64 rng(17);
  AttentionConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  SpikingAttention attn(cfg, rng);
  ad::BlockLayout layout;
  layout.offsets = {0, 5, 9};
  const std::size_t steps = 4, n = 9;
  const auto s = random_binary(rng, steps * n, 8, 0.5);
  auto s2 = Tensor(s.shape(), std::vector<float>(s.data().begin(), s.data().end()));
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 5; i < 9; ++i)
      for (std::size_t c = 0; c < 8; ++c) s2.data()[(t * n + i) * 8 + c] = 0.0f;
  const auto h1 = attn.forward(s, steps, layout, {});
  const auto h2 = attn.forward(s2, steps, layout, {});
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t c = 0; c < 8; ++c)
        REQUIRE(h1.data()[(t * n + i) * 8 + c] == h2.data()[(t * n + i) * 8 + c]);
}

TEST_CASE("attention costs are recorded per step") {
  std::mt19937_64 rng(7);
  AttentionConfig cfg;
  cfg.d = 4;
  cfg.heads = 1;
  SpikingAttention attn(cfg, rng);
  ad::BlockLayout layout;
  layout.offsets = {0, 2, 5};
  const auto s = random_binary(rng, 2 * 5, 4);
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  attn.forward(s, 2, layout, ctx);
  std::size_t proj0 = 0, proj1 = 0, scores = 0, attn_v = 0;
  for (const auto& r : trace.ops) {
    CHECK(r.fire_rate >= 0.0);
    CHECK(r.fire_rate <= 1.0);
    if (r.op == "qkv_proj") (r.t == 0 ? proj0 : proj1)++;
    if (r.op == "scores") {
      ++scores;
      CHECK(r.flops == (4u + 9u) * 4u);
    }
    if (r.op == "attn_v") ++attn_v;
  }
  CHECK(proj0 == 3);
  CHECK(proj1 == 1);
  CHECK(scores == 1);
  CHECK(attn_v == 2);
}

TEST_CASE("message passing examples") {
  std::mt19937_64 rng(1);
  MessagePassing mp(2, 0, rng);
  set_identity(mp.weight(), 1.0f);
  const auto s = make({2, 2}, {1, 0, 0, 1});
  const std::vector<std::uint32_t> src{0, 1}, dst{1, 0};
  auto h = mp.forward(s, 1, src, dst, Tensor(), {});
  CHECK(std::ranges::equal(h.data(), std::vector<float>{1, 1, 1, 1}));

  h = mp.forward(s, 1, {}, {}, Tensor(), {});
  CHECK(std::ranges::equal(h.data(), s.data()));
}

TEST_CASE("message passing sums repeated neighbours") {
  std::mt19937_64 rng(2);
  MessagePassing mp(3, 0, rng);
  const auto s = make({3, 3}, {0, 1, 0, 1, 0, 1, 1, 0, 1});
  const std::vector<std::uint32_t> src{1, 2}, dst{0, 0};
  const auto h = mp.forward(s, 1, src, dst, Tensor(), {});
  const auto& w = mp.weight();
  for (std::size_t c = 0; c < 3; ++c) {
    double msg = 0.0;
    for (std::size_t x = 0; x < 3; ++x) msg += s.data()[3 + x] * w.data()[x * 3 + c];
    CHECK(h.data()[c] == doctest::Approx(s.data()[c] + 2.0 * msg));
  }
}

TEST_CASE("message passing adds projected edge features on every step") {
  std::mt19937_64 rng(6);
  MessagePassing mp(2, 1, rng);
  fill(mp.weight(), 0.0f);
  ParamList params;
  mp.collect("mp", params);
  auto proj = std::ranges::find(params, std::string("mp.edge_proj.weight"), &NamedTensor::name)->tensor;
  proj.data()[0] = 2.0f;
  proj.data()[1] = -1.0f;
  const auto s = Tensor::zeros({2 * 2, 2});
  const std::vector<std::uint32_t> src{0}, dst{1};
  const auto e = make({1, 1}, {0.5f});
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  const auto h = mp.forward(s, 2, src, dst, e, ctx);
  CHECK(std::ranges::equal(h.data(), std::vector<float>{0, 0, 1, -0.5f, 0, 0, 1, -0.5f}));
  // The edge projection is shared by all steps and computed once.
  CHECK(trace.coding_flops == 1u * 1u * 2u);
  CHECK(trace.ops.size() == 2);
  CHECK(trace.ops[0].flops == 2u * 2u * 2u + 1u * 2u);
}

TEST_CASE("smlp quiescence, saturation and binarity") {
  std::mt19937_64 rng(9);
  SpikingMLP mlp(4, 1, lif(), rng);
  fill(mlp.linear(0).bias(), 0.0f);
  const std::size_t steps = 3, n = 5;
  auto out = mlp.forward(Tensor::zeros({steps * n, 4}), steps, {});
  CHECK(std::ranges::all_of(out.data(), [](float v) { return v == 0.0f; }));

  out = mlp.forward(random_tensor(rng, {steps * n, 4}, -3, 3), steps, {});
  CHECK(neurons::is_binary(out));

  // Pre-activation 2.5 >= 2 v_th: one step of beta 0.5 reaches threshold.
  fill(mlp.linear(0).weight(), 0.0f);
  fill(mlp.linear(0).bias(), 2.5f);
  out = mlp.forward(random_tensor(rng, {steps * n, 4}), steps, {});
  for (std::size_t i = 0; i < n * 4; ++i) CHECK(out.data()[i] == 1.0f);
}

TEST_CASE("smlp stacks depth stages and costs each one") {
  std::mt19937_64 rng(9);
  SpikingMLP mlp(4, 2, lif(), rng);
  CHECK(mlp.depth() == 2);
  Trace trace;
  Context ctx;
  ctx.trace = &trace;
  mlp.forward(random_tensor(rng, {2 * 3, 4}, -2, 2), 2, ctx, {0.25, 0.5});
  std::size_t stages = 0;
  for (const auto& r : trace.ops) {
    CHECK(r.op == "smlp");
    CHECK(r.flops == 3u * 4u * 4u);
    if (r.t == 0 && stages++ == 0) CHECK(r.fire_rate == 0.25);
  }
  CHECK(trace.ops.size() == 4);
  CHECK(all_binary(trace));
}

TEST_CASE("spiking blocks pass gradients to their parameters") {
  std::mt19937_64 rng(13);
  AttentionConfig cfg;
  cfg.d = 16;
  cfg.heads = 2;
  SpikingAttention attn(cfg, rng);
  SpikingMLP mlp(16, 1, lif(), rng);
  const std::size_t steps = 4, n = 30;
  const auto s = random_binary(rng, steps * n, 16);
  std::mt19937_64 noise(1);
  Context ctx;
  ctx.mode = Mode::train;
  ctx.rng = &noise;
  const auto h = attn.forward(s, steps, ad::BlockLayout::single(n), ctx);
  const auto out = mlp.forward(h, steps, ctx);
  ad::backward(ad::sum(ad::mul(out, random_tensor(rng, out.shape()))));
  for (char c : {'q', 'k', 'v'}) {
    CAPTURE(c);
    const auto& w = attn.projection(c).linear().weight();
    REQUIRE(w.has_grad());
    CHECK(std::ranges::any_of(w.grad(), [](float g) { return g != 0.0f; }));
    CHECK(std::ranges::any_of(attn.projection(c).noise_weight().grad(), [](float g) { return g != 0.0f; }));
  }
  ad::Tape::current().clear();
}
