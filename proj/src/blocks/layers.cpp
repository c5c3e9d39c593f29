#include "sghormer/blocks/layers.hpp"

#include <cmath>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::blocks {

Linear::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias) {
  if (in == 0 || out == 0) throw DimensionError("Linear: dimensions must be positive");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<float> w(in * out);
  for (auto& x : w) x = static_cast<float>(dist(rng));
  w_ = Tensor({in, out}, std::move(w), true);
  if (bias) {
    std::vector<float> b(out);
    for (auto& x : b) x = static_cast<float>(dist(rng));
    b_ = Tensor({out}, std::move(b), true);
  }
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != w_.rows()) {
    throw DimensionError("Linear: input " + ad::shape_str(x.shape()) + " does not match weight " +
                         ad::shape_str(w_.shape()));
  }
  if (b_.defined()) return ad::linear(x, w_, b_);
  return ad::matmul(x, w_);
}

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", w_, true});
  if (b_.defined()) out.push_back({prefix + ".bias", b_, true});
}

Norm::Norm(std::size_t dim)
    : gamma_(Tensor::full({dim}, 1.0f, true)),
      beta_(Tensor::zeros({dim}, true)),
      running_mean_(Tensor::zeros({dim})),
      running_var_(Tensor::full({dim}, 1.0f)) {}

Tensor Norm::forward(const Tensor& x, bool training) const {
  // The handles alias shared storage, so the running estimates update in place.
  Tensor mean = running_mean_;
  Tensor var = running_var_;
  return ad::batch_norm(x, gamma_, beta_, mean.data(), var.data(), training, kMomentum, kEps);
}

void Norm::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".gamma", gamma_, true});
  out.push_back({prefix + ".beta", beta_, true});
  out.push_back({prefix + ".running_mean", running_mean_, false});
  out.push_back({prefix + ".running_var", running_var_, false});
}

}  // namespace sghormer::blocks
