#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sghormer/autodiff/ops.hpp"
#include "sghormer/autodiff/tensor.hpp"
#include "sghormer/errors.hpp"

namespace sghormer::ad {

// Max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8),
// comparing the tape gradient of scalar f at x with central differences.
// The numeric side runs with smoothed spikes, so spike ops are checked
// against the derivative of their surrogate-smoothed forward.
template <typename T>
double grad_check(const std::function<BasicTensor<T>(const BasicTensor<T>&)>& f, BasicTensor<T> x, T eps) {
  if (!(eps > T(0))) throw ContractError("grad_check: eps must be positive");
  auto& tape = BasicTape<T>::current();
  tape.clear();
  const bool had_grad = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();

  BasicTensor<T> y = f(x);
  if (y.numel() != 1) {
    tape.clear();
    x.set_requires_grad(had_grad);
    throw ContractError("grad_check: f must return a scalar, got " + shape_str(y.shape()));
  }
  std::vector<double> analytic(x.numel(), 0.0);
  if (y.requires_grad() && !tape.empty()) {
    backward(y);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
  }
  tape.clear();
  x.zero_grad();

  double worst = 0.0;
  {
    NoGradGuard no_grad;
    SmoothSpikeGuard smooth;
    auto xd = x.data();
    for (std::size_t i = 0; i < xd.size(); ++i) {
      const T orig = xd[i];
      const T hi = orig + eps;
      const T lo = orig - eps;
      xd[i] = hi;
      const double fp = static_cast<double>(f(x).item());
      xd[i] = lo;
      const double fm = static_cast<double>(f(x).item());
      xd[i] = orig;
      // Divide by the step actually representable in T.
      const double numeric = (fp - fm) / (static_cast<double>(hi) - static_cast<double>(lo));
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  x.set_requires_grad(had_grad);
  return worst;
}

}  // namespace sghormer::ad
