#include <algorithm>
#include <random>

#include "doctest.h"
#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"
#include "sghormer/neurons/neuron.hpp"
#include "test_util.hpp"

using namespace sghormer;
using namespace sghormer::neurons;
using testutil::make;
using testutil::random_tensor;

namespace {

std::vector<Tensor> constant_drive(float c, std::size_t steps, ad::Shape shape = {1}) {
  return std::vector<Tensor>(steps, Tensor::full(shape, c));
}

std::vector<float> spikes_of(const SpikeTrain& s, std::size_t element = 0) {
  std::vector<float> out;
  for (const auto& t : s.steps()) out.push_back(t.data()[element]);
  return out;
}

double total_spikes(const SpikeTrain& s) {
  double n = 0;
  for (const auto& t : s.steps())
    for (float x : t.data()) n += x;
  return n;
}

}  // namespace

TEST_CASE("LIF with current 2 spikes every step") {
  NeuronConfig cfg;
  auto state = reset_state({1}, cfg);
  for (int t = 0; t < 5; ++t) {
    auto [s, next] = neuron_step(state, Tensor::full({1}, 2.0f), cfg);
    CHECK(s.data()[0] == 1.0f);
    CHECK(next.v.data()[0] == 0.0f);
    state = next;
  }
  CHECK(spikes_of(neuron_run(constant_drive(2.0f, 4), cfg)) == std::vector<float>{1, 1, 1, 1});
}

TEST_CASE("LIF with current 1 approaches threshold without firing") {
  NeuronConfig cfg;
  auto state = reset_state({1}, cfg);
  const std::vector<float> expect{0.5f, 0.75f, 0.875f, 0.9375f};
  for (float v : expect) {
    auto [s, next] = neuron_step(state, Tensor::full({1}, 1.0f), cfg);
    CHECK(s.data()[0] == 0.0f);
    CHECK(next.v.data()[0] == v);
    state = next;
  }
  // 1 - 2^-t is exact in float32 only up to t = 24; one step later v rounds to 1.
  CHECK(total_spikes(neuron_run(constant_drive(1.0f, 24), cfg)) == 0.0);
  CHECK(total_spikes(neuron_run(constant_drive(1.0f, 25), cfg)) == 1.0);
}

TEST_CASE("quiescent neuron stays at rest") {
  NeuronConfig cfg;
  auto [s, next] = neuron_step(reset_state({1}, cfg), Tensor::full({1}, 0.0f), cfg);
  CHECK(s.data()[0] == 0.0f);
  CHECK(next.v.data()[0] == 0.0f);
  CHECK(total_spikes(neuron_run(constant_drive(0.0f, 5, {2, 3}), cfg)) == 0.0);
}

TEST_CASE("neuron_run edge cases") {
  NeuronConfig cfg;
  auto one = neuron_run(constant_drive(0.3f, 1, {2, 2}), cfg);
  CHECK(one.time_steps() == 1);
  CHECK(total_spikes(one) == 0.0);
  CHECK_THROWS_AS(neuron_run({}, cfg), ContractError);
  CHECK_THROWS_AS(neuron_step(reset_state({2}, cfg), Tensor::zeros({3}), cfg), DimensionError);
}

TEST_CASE("reset_state fills with v_reset") {
  NeuronConfig cfg;
  auto z = reset_state({2, 3}, cfg);
  CHECK(z.v.shape() == ad::Shape{2, 3});
  for (float v : z.v.data()) CHECK(v == 0.0f);
  cfg.v_reset = -0.2f;
  auto r = reset_state({1}, cfg);
  CHECK(r.v.data()[0] == -0.2f);
}

TEST_CASE("hard reset holds exactly after every spike") {
  std::mt19937_64 rng(9);
  for (auto kind : {NeuronKind::IF, NeuronKind::LIF, NeuronKind::PLIF}) {
    NeuronConfig cfg;
    cfg.kind = kind;
    cfg.v_reset = -0.3f;
    SpikingNeuron neuron(cfg);
    auto state = reset_state({6, 7}, cfg);
    for (int t = 0; t < 20; ++t) {
      auto current = random_tensor(rng, {6, 7}, -1.0, 3.0);
      auto [s, next] = neuron_step(state, current, cfg, neuron.effective_beta());
      for (std::size_t e = 0; e < s.numel(); ++e) {
        REQUIRE((s.data()[e] == 0.0f || s.data()[e] == 1.0f));
        if (s.data()[e] == 1.0f) REQUIRE(next.v.data()[e] == cfg.v_reset);
      }
      state = next;
    }
  }
}

TEST_CASE("spike count is non-decreasing in constant drive") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<float> mag(0.0f, 5.0f);
  std::vector<float> drives(200);
  for (auto& c : drives) c = mag(rng);
  std::sort(drives.begin(), drives.end());
  for (auto kind : {NeuronKind::IF, NeuronKind::LIF}) {
    NeuronConfig cfg;
    cfg.kind = kind;
    double previous = -1.0;
    for (float c : drives) {
      const double n = total_spikes(neuron_run(constant_drive(c, 8), cfg));
      REQUIRE(n >= previous);
      previous = n;
    }
  }
}

TEST_CASE("IF and LIF differ under constant drive") {
  NeuronConfig lif;
  NeuronConfig integ;
  integ.kind = NeuronKind::IF;
  auto a = neuron_run(constant_drive(0.4f, 6), lif);
  auto b = neuron_run(constant_drive(0.4f, 6), integ);
  CHECK(spikes_of(a) != spikes_of(b));
  CHECK(total_spikes(a) == 0.0);
  CHECK(total_spikes(b) == 2.0);
}

TEST_CASE("PLIF decay receives a gradient") {
  NeuronConfig cfg;
  cfg.kind = NeuronKind::PLIF;
  SpikingNeuron neuron(cfg);
  REQUIRE(neuron.plif_raw().defined());
  CHECK(neuron.effective_beta().item() == doctest::Approx(0.5f));
  std::mt19937_64 rng(29);
  std::vector<Tensor> currents;
  for (int t = 0; t < 4; ++t) currents.push_back(random_tensor(rng, {4, 4}, 0.0, 2.5));
  auto train = neuron.run(currents);
  ad::backward(ad::sum(train.rate()));
  REQUIRE(neuron.plif_raw().has_grad());
  CHECK(neuron.plif_raw().grad()[0] != 0.0f);
}

TEST_CASE("config validation and parsing") {
  CHECK(validate(NeuronConfig{}).empty());
  NeuronConfig bad;
  bad.beta = 0.0f;
  bad.v_th = -1.0f;
  bad.surrogate_width = 0.0f;
  CHECK(validate(bad).size() >= 3);
  CHECK(neuron_kind_from_string("PLIF") == NeuronKind::PLIF);
  CHECK_THROWS_AS(neuron_kind_from_string("HH"), ConfigError);
}

TEST_CASE("spike train helpers") {
  auto s = SpikeTrain({make<float>({1, 2}, {1, 0}), make<float>({1, 2}, {1, 1})});
  CHECK(s.fire_rate() == doctest::Approx(0.75));
  auto r = s.rate();
  CHECK(r.data()[0] == 1.0f);
  CHECK(r.data()[1] == 0.5f);
  CHECK_THROWS_AS(SpikeTrain({make<float>({1, 1}, {0.5f})}), ContractError);
  CHECK_THROWS_AS(fire_rate(make<float>({1}, {2.0f})), ContractError);
}
