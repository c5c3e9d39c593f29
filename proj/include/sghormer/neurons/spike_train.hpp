#pragma once

#include <cstddef>
#include <vector>

#include "sghormer/autodiff/tensor.hpp"

namespace sghormer::neurons {

using ad::Tensor;

// True when every value is exactly 0 or 1.
bool is_binary(const Tensor& t);

// Fraction of ones in a binary tensor. Throws ContractError on other values.
double fire_rate(const Tensor& t);

// T binary tensors of identical shape, one per time step (usually N x d).
class SpikeTrain {
 public:
  SpikeTrain() = default;
  // Throws ContractError if a step is non-binary or shapes differ.
  explicit SpikeTrain(std::vector<Tensor> steps);

  std::size_t time_steps() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  const Tensor& step(std::size_t t) const { return steps_.at(t); }
  const std::vector<Tensor>& steps() const { return steps_; }
  std::size_t rows() const { return steps_.front().rows(); }
  std::size_t cols() const { return steps_.front().cols(); }

  // Mean over t of each element (the firing-rate matrix), differentiable.
  Tensor rate() const;
  double fire_rate() const;

 private:
  std::vector<Tensor> steps_;
};

}  // namespace sghormer::neurons
