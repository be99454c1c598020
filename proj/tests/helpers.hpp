#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "ttcast/tensor.hpp"

// Shared test helpers: random fills and central-difference gradient checks.

namespace ttcast::testutil {

template <class T>
void fill_uniform(Tensor<T>& t, std::mt19937& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (T& v : t.mutable_value()) v = static_cast<T>(d(rng));
}

// Central finite differences on every element of `param` against the reverse-
// mode gradient. `loss_fn` must rebuild the graph from current parameter
// values. Returns the worst relative error, with an absolute floor so
// near-zero gradients do not blow the ratio up.
inline double fd_check(GradientContext<double>& ctx, Tensor<double>& param,
                       const std::function<Tensor<double>()>& loss_fn, double h = 1e-6,
                       double abs_floor = 1e-8) {
  const std::vector<double> autodiff = ctx.gradient_of(loss_fn(), param);
  double worst = 0.0;
  auto& values = param.mutable_value();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const double fp = loss_fn().scalar();
    values[i] = saved - h;
    const double fm = loss_fn().scalar();
    values[i] = saved;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(autodiff[i]), abs_floor});
    worst = std::max(worst, std::abs(fd - autodiff[i]) / denom);
  }
  return worst;
}

}  // namespace ttcast::testutil
