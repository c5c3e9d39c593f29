#include "sghormer/cli/optimizer.hpp"

#include <cmath>

namespace sghormer::cli {

AdamW::AdamW(std::vector<ad::Tensor> params, Options opts) : params_(std::move(params)), opts_(opts) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void AdamW::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Tensor p = params_[i];
    if (!p.has_grad()) continue;
    auto data = p.data();
    auto grad = p.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = grad[j];
      m[j] = opts_.beta1 * m[j] + (1.0 - opts_.beta1) * g;
      v[j] = opts_.beta2 * v[j] + (1.0 - opts_.beta2) * g * g;
      double x = data[j];
      x -= opts_.lr * opts_.weight_decay * x;
      x -= opts_.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + opts_.eps);
      data[j] = static_cast<float>(x);
    }
  }
}

void AdamW::zero_grad() {
  for (const auto& p : params_) p.zero_grad();
}

}  // namespace sghormer::cli
