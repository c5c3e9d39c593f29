#include "sghormer/blocks/srb.hpp"

#include <algorithm>
#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

SpikeStatistics spike_statistics(const Tensor& stacked, std::size_t steps) {
  if (steps == 0 || stacked.numel() % steps != 0) throw DimensionError("spike_statistics: bad step count");
  const std::size_t per_step = stacked.numel() / steps;
  auto d = stacked.data();
  SpikeStatistics out{std::vector<float>(per_step, 0.0f), std::vector<float>(per_step, 0.0f)};
  const double inv_t = 1.0 / static_cast<double>(steps);
  for (std::size_t e = 0; e < per_step; ++e) {
    double s = 0.0;
    for (std::size_t t = 0; t < steps; ++t) s += d[t * per_step + e];
    const double mu = s * inv_t;
    double ss = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double dev = d[t * per_step + e] - mu;
      ss += dev * dev;
    }
    out.mean[e] = static_cast<float>(mu);
    out.var[e] = static_cast<float>(ss * inv_t);
  }
  return out;
}

SpikeStatistics spike_statistics(const SpikeTrain& train) { return spike_statistics(stack_steps(train), train.time_steps()); }

SpikingRectifyBlock::SpikingRectifyBlock(std::size_t in_dim, std::size_t out_dim, std::mt19937_64& rng,
                                         bool use_noise)
    : use_noise_(use_noise), linear_(in_dim, out_dim, rng), norm_(out_dim) {
  if (use_noise_) noise_weight_ = Tensor::full({in_dim}, kNoiseInit, true);
}

Tensor SpikingRectifyBlock::forward(const Tensor& s, std::size_t steps, std::size_t used, const Context& ctx,
                                    const std::string& name) const {
  if (used == 0 || used > steps) throw ContractError("SRB: step range out of bounds");
  if (s.rank() != 2 || s.cols() != linear_.in_dim()) {
    throw DimensionError("SRB: input " + ad::shape_str(s.shape()) + " does not match width " +
                         std::to_string(linear_.in_dim()));
  }
  const std::size_t n = s.rows() / steps;
  const Tensor s_used = used == steps ? s : ad::slice_rows(s, 0, used * n);
  Tensor x = s_used;
  if (use_noise_) {
    const SpikeStatistics stats = spike_statistics(s, steps);
    const std::size_t per_step = stats.mean.size();
    std::vector<float> u(used * per_step);
    if (ctx.training()) {
      if (!ctx.rng) throw ContractError("SRB: training mode needs a random generator");
      std::normal_distribution<double> z(0.0, 1.0);
      for (std::size_t t = 0; t < used; ++t)
        for (std::size_t e = 0; e < per_step; ++e) {
          const double var = std::max(1.0 - static_cast<double>(stats.var[e]), static_cast<double>(kMinVariance));
          u[t * per_step + e] = static_cast<float>(stats.mean[e] + std::sqrt(var) * z(*ctx.rng));
        }
    } else {
      for (std::size_t t = 0; t < used; ++t) std::copy(stats.mean.begin(), stats.mean.end(), u.begin() + t * per_step);
    }
    const Tensor noise({used * n, s.cols()}, std::move(u));
    x = ad::sub(s_used, ad::mul(noise, noise_weight_));
    for (std::size_t t = 0; t < used; ++t) {
      record_op(ctx, t, "srb", name + "/rectify", static_cast<std::uint64_t>(n) * s.cols(),
                step_fire_rate(s, steps, t));
    }
  }
  Tensor out = norm_.forward(linear_.forward(x), ctx.training());
  check_finite(ctx, out, name);
  return out;
}

void SpikingRectifyBlock::collect(const std::string& prefix, ParamList& out) const {
  if (use_noise_) out.push_back({prefix + ".noise_weight", noise_weight_, true});
  linear_.collect(prefix + ".linear", out);
  norm_.collect(prefix + ".norm", out);
}

}  // namespace sghormer::blocks
