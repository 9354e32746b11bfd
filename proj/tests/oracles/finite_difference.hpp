#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "detprod/neural/tensor.hpp"

namespace oracle {

// Central difference of f with respect to every entry of a parameter.
inline detprod::nn::Tensor<double> numeric_gradient(detprod::nn::Parameter<double>& p,
                                                    const std::function<double()>& f, double step = 1e-5) {
  detprod::nn::Tensor<double> g(p.value.shape());
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    p.value[i] = saved + step;
    const double up = f();
    p.value[i] = saved - step;
    const double down = f();
    p.value[i] = saved;
    g[i] = (up - down) / (2 * step);
  }
  return g;
}

// Largest absolute deviation divided by the largest magnitude in either
// tensor.
inline double relative_error(const detprod::nn::Tensor<double>& analytic, const detprod::nn::Tensor<double>& numeric) {
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return scale == 0 ? diff : diff / scale;
}

}  // namespace oracle
