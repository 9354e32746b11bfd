#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "detprod/neural/tensor.hpp"

namespace detprod::nn {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. step() consumes the
/// accumulated gradients and zeroes them.
template <class Real>
class Adam {
 public:
  Adam(std::vector<Parameter<Real>*> params, AdamConfig config = {})
      : config_(config), params_(std::move(params)) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step() {
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double g = static_cast<double>(p.grad[k]);
        const double mk = config_.beta1 * static_cast<double>(m[k]) + (1.0 - config_.beta1) * g;
        const double vk = config_.beta2 * static_cast<double>(v[k]) + (1.0 - config_.beta2) * g * g;
        m[k] = static_cast<Real>(mk);
        v[k] = static_cast<Real>(vk);
        const double update = config_.learning_rate * (mk / c1) / (std::sqrt(vk / c2) + config_.epsilon);
        p.value[k] = static_cast<Real>(static_cast<double>(p.value[k]) - update);
      }
      p.zero_grad();
    }
  }

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<Parameter<Real>*> params_;
  std::vector<Tensor<Real>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace detprod::nn
