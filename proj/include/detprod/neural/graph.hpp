#pragma once

// Tape-based reverse-mode differentiation over rank-2 tensors. Every op
// appends a node holding its value and a closure that pushes the node's
// gradient into its inputs; backward() replays the tape in reverse.

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "detprod/corpus/vocabulary.hpp"
#include "detprod/neural/tensor.hpp"
#include "detprod/random.hpp"

namespace detprod::nn {

struct Var {
  std::size_t index = 0;
};

template <class Real>
class Graph {
 public:
  Graph() = default;
  // op closures capture `this`
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor<Real> value) { return push(std::move(value), false, "constant"); }

  /// Leaf bound to a Parameter; backward() adds into parameter.grad.
  Var parameter(Parameter<Real>& p) {
    Var v = push(p.value, true, p.name.c_str());
    nodes_[v.index].param = &p;
    return v;
  }

  const Tensor<Real>& value(Var v) const { return nodes_.at(v.index).value; }
  const Tensor<Real>& grad(Var v) const { return nodes_.at(v.index).grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and accumulates gradients
  /// into every reachable Parameter.
  void backward(Var loss) {
    if (value(loss).size() != 1) throw ShapeError("backward: loss must be 1x1, got " + value(loss).shape_string());
    for (auto& n : nodes_) {
      if (n.needs_grad) n.grad = Tensor<Real>(n.value.shape());
    }
    if (!nodes_[loss.index].needs_grad) return;
    nodes_[loss.index].grad[0] = Real(1);
    for (std::size_t i = loss.index + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (!n.needs_grad) continue;
      if (n.backward) n.backward();
      if (n.param) {
        auto& g = n.param->grad;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
      }
    }
  }

  Var matmul(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    check_rank2(A, "matmul");
    check_rank2(B, "matmul");
    if (A.cols() != B.rows()) throw ShapeError("matmul: " + A.shape_string() + " x " + B.shape_string());
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor<Real> C = Tensor<Real>::matrix(m, n);
    for (std::size_t i = 0; i < m; ++i) {
      Real* c = &C[i * n];
      for (std::size_t p = 0; p < k; ++p) {
        const Real a_ip = A[i * k + p];
        if (a_ip == Real(0)) continue;
        const Real* brow = &B[p * n];
        for (std::size_t j = 0; j < n; ++j) c[j] += a_ip * brow[j];
      }
    }
    Var out = push(std::move(C), needs(a) || needs(b), "matmul");
    set_backward(out, [this, a, b, out, m, k, n] {
      const auto& G = nodes_[out.index].grad;
      if (needs(a)) {
        auto& dA = nodes_[a.index].grad;
        const auto& B = nodes_[b.index].value;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            Real acc = 0;
            for (std::size_t j = 0; j < n; ++j) acc += G[i * n + j] * B[p * n + j];
            dA[i * k + p] += acc;
          }
      }
      if (needs(b)) {
        auto& dB = nodes_[b.index].grad;
        const auto& A = nodes_[a.index].value;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const Real a_ip = A[i * k + p];
            if (a_ip == Real(0)) continue;
            for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += a_ip * G[i * n + j];
          }
      }
    });
    return out;
  }

  Var add(Var a, Var b) { return binary(a, b, "add", [](Real x, Real y) { return x + y; }, Real(1), Real(1)); }
  Var sub(Var a, Var b) { return binary(a, b, "sub", [](Real x, Real y) { return x - y; }, Real(1), Real(-1)); }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    const auto& A = value(a);
    const auto& B = value(b);
    Tensor<Real> C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
    Var out = push(std::move(C), needs(a) || needs(b), "mul");
    set_backward(out, [this, a, b, out] {
      const auto& G = nodes_[out.index].grad;
      if (needs(a)) {
        auto& dA = nodes_[a.index].grad;
        const auto& B = nodes_[b.index].value;
        for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * B[i];
      }
      if (needs(b)) {
        auto& dB = nodes_[b.index].grad;
        const auto& A = nodes_[a.index].value;
        for (std::size_t i = 0; i < G.size(); ++i) dB[i] += G[i] * A[i];
      }
    });
    return out;
  }

  /// a (m x n) plus a 1 x n row broadcast over every row.
  Var add_row(Var a, Var row) {
    const auto& A = value(a);
    const auto& R = value(row);
    check_rank2(A, "add_row");
    if (R.rows() != 1 || R.cols() != A.cols()) throw ShapeError("add_row: " + A.shape_string() + " + " + R.shape_string());
    Tensor<Real> C = A;
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < A.cols(); ++j) C.at(i, j) += R[j];
    Var out = push(std::move(C), needs(a) || needs(row), "add_row");
    set_backward(out, [this, a, row, out] {
      const auto& G = nodes_[out.index].grad;
      if (needs(a)) {
        auto& dA = nodes_[a.index].grad;
        for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i];
      }
      if (needs(row)) {
        auto& dR = nodes_[row.index].grad;
        const std::size_t n = G.cols();
        for (std::size_t i = 0; i < G.rows(); ++i)
          for (std::size_t j = 0; j < n; ++j) dR[j] += G[i * n + j];
      }
    });
    return out;
  }

  Var scale(Var a, Real c) {
    Tensor<Real> C = value(a);
    for (auto& x : C.values()) x *= c;
    Var out = push(std::move(C), needs(a), "scale");
    set_backward(out, [this, a, out, c] {
      const auto& G = nodes_[out.index].grad;
      auto& dA = nodes_[a.index].grad;
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += c * G[i];
    });
    return out;
  }

  /// 1 - a, elementwise.
  Var one_minus(Var a) {
    Tensor<Real> C = value(a);
    for (auto& x : C.values()) x = Real(1) - x;
    Var out = push(std::move(C), needs(a), "one_minus");
    set_backward(out, [this, a, out] {
      const auto& G = nodes_[out.index].grad;
      auto& dA = nodes_[a.index].grad;
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] -= G[i];
    });
    return out;
  }

  Var sigmoid(Var a) {
    Tensor<Real> C = value(a);
    for (auto& x : C.values()) x = x >= Real(0) ? Real(1) / (Real(1) + std::exp(-x)) : std::exp(x) / (Real(1) + std::exp(x));
    Var out = push(std::move(C), needs(a), "sigmoid");
    set_backward(out, [this, a, out] {
      const auto& G = nodes_[out.index].grad;
      const auto& Y = nodes_[out.index].value;
      auto& dA = nodes_[a.index].grad;
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * Y[i] * (Real(1) - Y[i]);
    });
    return out;
  }

  Var tanh(Var a) {
    Tensor<Real> C = value(a);
    for (auto& x : C.values()) x = std::tanh(x);
    Var out = push(std::move(C), needs(a), "tanh");
    set_backward(out, [this, a, out] {
      const auto& G = nodes_[out.index].grad;
      const auto& Y = nodes_[out.index].value;
      auto& dA = nodes_[a.index].grad;
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * (Real(1) - Y[i] * Y[i]);
    });
    return out;
  }

  /// [a | b] along columns.
  Var concat(Var a, Var b) {
    const auto& A = value(a);
    const auto& B = value(b);
    check_rank2(A, "concat");
    check_rank2(B, "concat");
    if (A.rows() != B.rows()) throw ShapeError("concat: " + A.shape_string() + " | " + B.shape_string());
    const std::size_t ca = A.cols(), cb = B.cols();
    Tensor<Real> C = Tensor<Real>::matrix(A.rows(), ca + cb);
    for (std::size_t i = 0; i < A.rows(); ++i) {
      std::copy_n(&A[i * ca], ca, &C[i * (ca + cb)]);
      std::copy_n(&B[i * cb], cb, &C[i * (ca + cb) + ca]);
    }
    Var out = push(std::move(C), needs(a) || needs(b), "concat");
    set_backward(out, [this, a, b, out, ca, cb] {
      const auto& G = nodes_[out.index].grad;
      for (std::size_t i = 0; i < G.rows(); ++i) {
        if (needs(a))
          for (std::size_t j = 0; j < ca; ++j) nodes_[a.index].grad[i * ca + j] += G[i * (ca + cb) + j];
        if (needs(b))
          for (std::size_t j = 0; j < cb; ++j) nodes_[b.index].grad[i * cb + j] += G[i * (ca + cb) + ca + j];
      }
    });
    return out;
  }

  /// Row ids[b] of table for every b: (|ids| x cols).
  Var embedding(Var table, std::span<const TokenId> ids) {
    const auto& T = value(table);
    check_rank2(T, "embedding");
    const std::size_t e = T.cols();
    Tensor<Real> C = Tensor<Real>::matrix(ids.size(), e);
    for (std::size_t b = 0; b < ids.size(); ++b) {
      if (ids[b] < 0 || static_cast<std::size_t>(ids[b]) >= T.rows()) {
        throw ShapeError("embedding: id " + std::to_string(ids[b]) + " outside table " + T.shape_string());
      }
      std::copy_n(&T[static_cast<std::size_t>(ids[b]) * e], e, &C[b * e]);
    }
    Var out = push(std::move(C), needs(table), "embedding");
    set_backward(out, [this, table, out, rows = std::vector<TokenId>(ids.begin(), ids.end()), e] {
      const auto& G = nodes_[out.index].grad;
      auto& dT = nodes_[table.index].grad;
      for (std::size_t b = 0; b < rows.size(); ++b)
        for (std::size_t j = 0; j < e; ++j) dT[static_cast<std::size_t>(rows[b]) * e + j] += G[b * e + j];
    });
    return out;
  }

  /// Inverted dropout. At inference (or rate 0) returns `a` itself.
  Var dropout(Var a, double rate, bool training, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return a;
    Tensor<Real> mask(value(a).shape());
    const Real keep_scale = Real(1.0 / (1.0 - rate));
    for (auto& m : mask.values()) m = uniform01(rng) < rate ? Real(0) : keep_scale;
    return mul(a, constant(std::move(mask)));
  }

  /// Sum of all elements, as a 1x1 tensor.
  Var sum(Var a) {
    Real total = 0;
    for (Real x : value(a).values()) total += x;
    Var out = push(Tensor<Real>::matrix(1, 1, total), needs(a), "sum");
    set_backward(out, [this, a, out] {
      const Real g = nodes_[out.index].grad[0];
      for (auto& d : nodes_[a.index].grad.values()) d += g;
    });
    return out;
  }

  /// sum_b weights[b] * (-log softmax(logits[b])[targets[b]]), as 1x1.
  /// Empty weights means all ones.
  Var cross_entropy(Var logits, std::span<const TokenId> targets, std::span<const Real> weights = {}) {
    const auto& L = value(logits);
    check_rank2(L, "cross_entropy");
    if (targets.size() != L.rows()) throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " + L.shape_string());
    if (!weights.empty() && weights.size() != targets.size()) throw ShapeError("cross_entropy: weight count mismatch");
    const std::size_t v = L.cols();
    Tensor<Real> probs(L.shape());
    Real total = 0;
    for (std::size_t b = 0; b < L.rows(); ++b) {
      if (targets[b] < 0 || static_cast<std::size_t>(targets[b]) >= v) throw ShapeError("cross_entropy: target id out of range");
      const Real* row = &L[b * v];
      const Real mx = *std::max_element(row, row + v);
      Real z = 0;
      for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
      const Real lse = mx + std::log(z);
      for (std::size_t j = 0; j < v; ++j) probs[b * v + j] = std::exp(row[j] - lse);
      const Real w = weights.empty() ? Real(1) : weights[b];
      total += w * (lse - row[static_cast<std::size_t>(targets[b])]);
    }
    Var out = push(Tensor<Real>::matrix(1, 1, total), needs(logits), "cross_entropy");
    set_backward(out, [this, logits, out, v, probs = std::move(probs),
                       tg = std::vector<TokenId>(targets.begin(), targets.end()),
                       w = std::vector<Real>(weights.begin(), weights.end())] {
      const Real g = nodes_[out.index].grad[0];
      auto& dL = nodes_[logits.index].grad;
      for (std::size_t b = 0; b < tg.size(); ++b) {
        const Real wb = g * (w.empty() ? Real(1) : w[b]);
        for (std::size_t j = 0; j < v; ++j) dL[b * v + j] += wb * probs[b * v + j];
        dL[b * v + static_cast<std::size_t>(tg[b])] -= wb;
      }
    });
    return out;
  }

 private:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;
    std::function<void()> backward;
    Parameter<Real>* param = nullptr;
    bool needs_grad = false;
  };

  bool needs(Var v) const { return nodes_[v.index].needs_grad; }

  Var push(Tensor<Real> value, bool needs_grad, const char* op) {
    for (Real x : value.values()) {
      if (!std::isfinite(x)) throw Error(std::string("non-finite value produced by ") + op);
    }
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, needs_grad});
    return Var{nodes_.size() - 1};
  }

  void set_backward(Var v, std::function<void()> fn) {
    if (nodes_[v.index].needs_grad) nodes_[v.index].backward = std::move(fn);
  }

  static void check_rank2(const Tensor<Real>& t, const char* op) {
    if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + t.shape_string());
  }

  void same_shape(Var a, Var b, const char* op) const {
    if (!value(a).same_shape(value(b))) {
      throw ShapeError(std::string(op) + ": " + value(a).shape_string() + " vs " + value(b).shape_string());
    }
  }

  template <class F>
  Var binary(Var a, Var b, const char* op, F f, Real da, Real db) {
    same_shape(a, b, op);
    const auto& A = value(a);
    const auto& B = value(b);
    Tensor<Real> C(A.shape());
    for (std::size_t i = 0; i < C.size(); ++i) C[i] = f(A[i], B[i]);
    Var out = push(std::move(C), needs(a) || needs(b), op);
    set_backward(out, [this, a, b, out, da, db] {
      const auto& G = nodes_[out.index].grad;
      if (needs(a))
        for (std::size_t i = 0; i < G.size(); ++i) nodes_[a.index].grad[i] += da * G[i];
      if (needs(b))
        for (std::size_t i = 0; i < G.size(); ++i) nodes_[b.index].grad[i] += db * G[i];
    });
    return out;
  }

  std::vector<Node> nodes_;
};

}  // namespace detprod::nn
