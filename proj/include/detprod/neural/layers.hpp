#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "detprod/neural/graph.hpp"
#include "detprod/neural/tensor.hpp"
#include "detprod/random.hpp"

namespace detprod::nn {

/// uniform(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
template <class Real>
void glorot_uniform(Tensor<Real>& t, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
  for (auto& x : t.values()) x = static_cast<Real>((2.0 * uniform01(rng) - 1.0) * limit);
}

template <class Real>
void uniform_init(Tensor<Real>& t, double limit, Rng& rng) {
  for (auto& x : t.values()) x = static_cast<Real>((2.0 * uniform01(rng) - 1.0) * limit);
}

/// GRU weights; W_* are input x hidden, U_* hidden x hidden, b_* 1 x hidden.
template <class Real>
struct GruParams {
  GruParams() = default;
  GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden)
      : w_z(prefix + ".W_z", Tensor<Real>::matrix(input_dim, hidden)),
        w_r(prefix + ".W_r", Tensor<Real>::matrix(input_dim, hidden)),
        w_h(prefix + ".W_h", Tensor<Real>::matrix(input_dim, hidden)),
        u_z(prefix + ".U_z", Tensor<Real>::matrix(hidden, hidden)),
        u_r(prefix + ".U_r", Tensor<Real>::matrix(hidden, hidden)),
        u_h(prefix + ".U_h", Tensor<Real>::matrix(hidden, hidden)),
        b_z(prefix + ".b_z", Tensor<Real>::matrix(1, hidden)),
        b_r(prefix + ".b_r", Tensor<Real>::matrix(1, hidden)),
        b_h(prefix + ".b_h", Tensor<Real>::matrix(1, hidden)) {}

  Parameter<Real> w_z, w_r, w_h;
  Parameter<Real> u_z, u_r, u_h;
  Parameter<Real> b_z, b_r, b_h;

  std::size_t input_dim() const { return w_z.value.rows(); }
  std::size_t hidden() const { return w_z.value.cols(); }

  std::vector<Parameter<Real>*> parameters() { return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h}; }

  void init(Rng& rng) {
    for (auto* p : {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h}) glorot_uniform(p->value, rng);
    for (auto* p : {&b_z, &b_r, &b_h}) p->value.fill(Real(0));
  }
};

/// The nine GRU parameters registered in one graph.
struct GruVars {
  Var w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h;
};

template <class Real>
GruVars bind(Graph<Real>& g, GruParams<Real>& p) {
  return {g.parameter(p.w_z), g.parameter(p.w_r), g.parameter(p.w_h), g.parameter(p.u_z), g.parameter(p.u_r),
          g.parameter(p.u_h), g.parameter(p.b_z), g.parameter(p.b_r), g.parameter(p.b_h)};
}

/// z = s(xW_z + hU_z + b_z), r = s(xW_r + hU_r + b_r),
/// c = tanh(xW_h + (r*h)U_h + b_h), h' = (1 - z)*h + z*c.
/// x is batch x input, h is batch x hidden.
template <class Real>
Var gru_step(Graph<Real>& g, Var x, Var h, const GruVars& p) {
  auto gate = [&](Var w, Var u, Var b, Var hidden_in) {
    return g.add_row(g.add(g.matmul(x, w), g.matmul(hidden_in, u)), b);
  };
  const Var z = g.sigmoid(gate(p.w_z, p.u_z, p.b_z, h));
  const Var r = g.sigmoid(gate(p.w_r, p.u_r, p.b_r, h));
  const Var candidate = g.tanh(gate(p.w_h, p.u_h, p.b_h, g.mul(r, h)));
  return g.add(g.mul(g.one_minus(z), h), g.mul(z, candidate));
}

/// Single GRU step outside any training graph.
template <class Real>
Tensor<Real> gru_forward(const Tensor<Real>& x, const Tensor<Real>& h, GruParams<Real>& p) {
  Graph<Real> g;
  const auto vars = bind(g, p);
  return g.value(gru_step(g, g.constant(x), g.constant(h), vars));
}

struct SoftmaxLoss {
  double loss = 0.0;
  std::vector<double> probs;
};

/// Log-sum-exp stabilised softmax and -log p[target].
inline SoftmaxLoss softmax_cross_entropy(std::span<const double> logits, std::size_t target) {
  if (target >= logits.size()) throw Error("softmax_cross_entropy: target out of range");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double lse = mx + std::log(z);
  SoftmaxLoss out;
  out.probs.reserve(logits.size());
  for (double l : logits) out.probs.push_back(std::exp(l - lse));
  out.loss = lse - logits[target];
  return out;
}

/// Inverted dropout on a plain vector: identity unless training.
inline std::vector<double> dropout(std::span<const double> x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout: rate must be in [0, 1)");
  std::vector<double> out(x.begin(), x.end());
  if (!training || rate == 0.0) return out;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (auto& v : out) v = uniform01(rng) < rate ? 0.0 : v * keep_scale;
  return out;
}

}  // namespace detprod::nn
