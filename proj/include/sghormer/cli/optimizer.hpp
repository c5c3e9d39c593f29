#pragma once

#include <vector>

#include "sghormer/autodiff/tensor.hpp"

namespace sghormer::cli {

// Adam with decoupled weight decay. Parameters without a gradient are skipped.
class AdamW {
 public:
  struct Options {
    double lr = 1e-3;
    double weight_decay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamW(std::vector<ad::Tensor> params, Options opts);

  void step();
  void zero_grad();
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<ad::Tensor> params_;
  Options opts_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace sghormer::cli
