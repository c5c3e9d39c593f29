#pragma once

#include <random>
#include <string>
#include <vector>

#include "sghormer/autodiff/tensor.hpp"

namespace sghormer::blocks {

using ad::Tensor;

// Named handle into a module's storage. Buffers (trainable == false) are
// saved in checkpoints but never touched by the optimizer.
struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};
using ParamList = std::vector<NamedTensor>;

// x · w + b with w of shape in×out, initialized uniform in ±1/sqrt(in).
class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng, bool bias = true);

  Tensor forward(const Tensor& x) const;
  std::size_t in_dim() const { return w_.rows(); }
  std::size_t out_dim() const { return w_.cols(); }
  Tensor& weight() { return w_; }
  Tensor& bias() { return b_; }
  const Tensor& weight() const { return w_; }
  const Tensor& bias() const { return b_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Tensor w_;
  Tensor b_;
};

// Per-feature batch normalization with running statistics.
class Norm {
 public:
  static constexpr float kMomentum = 0.1f;
  static constexpr float kEps = 1e-5f;

  Norm() = default;
  explicit Norm(std::size_t dim);

  // Training uses the rows of x and updates the running estimates.
  Tensor forward(const Tensor& x, bool training) const;

  Tensor& gamma() { return gamma_; }
  Tensor& beta() { return beta_; }
  const Tensor& running_mean() const { return running_mean_; }
  const Tensor& running_var() const { return running_var_; }

  void collect(const std::string& prefix, ParamList& out) const;

 private:
  Tensor gamma_, beta_;
  Tensor running_mean_, running_var_;
};

}  // namespace sghormer::blocks
