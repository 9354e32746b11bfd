#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "detprod/neural/adam.hpp"
#include "detprod/neural/checkpoint.hpp"
#include "detprod/neural/graph.hpp"
#include "detprod/neural/layers.hpp"
#include "oracles/finite_difference.hpp"

namespace detprod::nn {
namespace {

Tensor<double> random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  auto t = Tensor<double>::matrix(r, c);
  for (auto& x : t.values()) x = (2 * uniform01(rng) - 1) * scale;
  return t;
}

TEST(Graph, MatmulAgainstIdentity) {
  Rng rng(1);
  Graph<double> g;
  auto a = random_matrix(3, 4, rng);
  auto eye = Tensor<double>::matrix(4, 4);
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1;
  EXPECT_EQ(g.value(g.matmul(g.constant(a), g.constant(eye))), a);
  EXPECT_THROW(g.matmul(g.constant(a), g.constant(a)), ShapeError);
  EXPECT_THROW(g.add(g.constant(a), g.constant(eye)), ShapeError);
}

TEST(Graph, ActivationsAtZero) {
  Graph<double> g;
  auto z = g.constant(Tensor<double>::matrix(2, 3));
  for (double v : g.value(g.sigmoid(z)).values()) EXPECT_EQ(v, 0.5);
  for (double v : g.value(g.tanh(z)).values()) EXPECT_EQ(v, 0.0);
  for (double v : g.value(g.one_minus(z)).values()) EXPECT_EQ(v, 1.0);
}

TEST(Graph, GradientOfSummedProductIsColumnSums) {
  Rng rng(2);
  Parameter<double> x("x", random_matrix(4, 1, rng));
  const auto a = random_matrix(3, 4, rng);
  auto f = [&] {
    Graph<double> g;
    return g.value(g.sum(g.matmul(g.constant(a), g.parameter(x))))[0];
  };
  Graph<double> g;
  g.backward(g.sum(g.matmul(g.constant(a), g.parameter(x))));
  for (std::size_t j = 0; j < 4; ++j) {
    double col = 0;
    for (std::size_t i = 0; i < 3; ++i) col += a.at(i, j);
    EXPECT_NEAR(x.grad[j], col, 1e-14);
  }
  EXPECT_LT(oracle::relative_error(x.grad, oracle::numeric_gradient(x, f)), 1e-8);
}

TEST(Graph, EveryOpMatchesFiniteDifferences) {
  Rng rng(3);
  Parameter<double> a("a", random_matrix(2, 3, rng));
  Parameter<double> b("b", random_matrix(2, 3, rng));
  Parameter<double> r("r", random_matrix(1, 3, rng));
  Parameter<double> table("table", random_matrix(5, 3, rng));
  const std::vector<TokenId> ids{4, 0};
  const std::vector<TokenId> targets{1, 5};
  const std::vector<double> weights{0.25, 2.0};
  auto build = [&](Graph<double>& g) {
    const Var va = g.parameter(a), vb = g.parameter(b), vr = g.parameter(r), vt = g.parameter(table);
    Var x = g.add_row(g.mul(g.sigmoid(va), g.tanh(vb)), vr);
    x = g.sub(x, g.scale(g.one_minus(va), 0.3));
    x = g.add(x, g.embedding(vt, ids));
    const Var wide = g.concat(x, vb);
    return g.cross_entropy(wide, targets, weights);
  };
  auto f = [&] {
    Graph<double> g;
    return g.value(build(g))[0];
  };
  Graph<double> g;
  g.backward(build(g));
  for (auto* p : {&a, &b, &r, &table}) {
    const auto analytic = p->grad;
    EXPECT_LT(oracle::relative_error(analytic, oracle::numeric_gradient(*p, f)), 1e-7) << p->name;
  }
}

TEST(Graph, NonFiniteValuesAreReported) {
  Graph<double> g;
  auto t = Tensor<double>::matrix(1, 2, std::numeric_limits<double>::quiet_NaN());
  EXPECT_THROW(g.sigmoid(g.constant(t)), Error);
  auto big = Tensor<double>::matrix(1, 1, 1e308);
  EXPECT_THROW(g.scale(g.constant(big), 10.0), Error);
}

TEST(Graph, BackwardRequiresScalarLoss) {
  Graph<double> g;
  Parameter<double> p("p", Tensor<double>::matrix(2, 2, 1.0));
  EXPECT_THROW(g.backward(g.parameter(p)), ShapeError);
}

TEST(Gru, ZeroParametersHalveTheState) {
  GruParams<double> p("gru", 3, 4);
  const auto x = Tensor<double>::row({1.0, -2.0, 0.5});
  const auto h = Tensor<double>::row({0.2, -0.4, 1.0, 0.0});
  const auto out = gru_forward(x, h, p);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(out[i], 0.5 * h[i]);
}

TEST(Gru, ZeroStateWithZeroParametersStaysZero) {
  GruParams<double> p("gru", 3, 4);
  const auto out = gru_forward(Tensor<double>::row({5.0, 1.0, -3.0}), Tensor<double>::matrix(1, 4), p);
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Gru, OutputBoundedByPreviousStateOrOne) {
  Rng rng(4);
  GruParams<double> p("gru", 5, 6);
  for (int trial = 0; trial < 200; ++trial) {
    p.init(rng);
    for (auto* q : p.parameters()) q->value = random_matrix(q->value.rows(), q->value.cols(), rng, 3.0);
    const auto x = random_matrix(3, 5, rng, 10.0);
    const auto h = random_matrix(3, 6, rng, 2.0);
    const auto out = gru_forward(x, h, p);
    for (std::size_t i = 0; i < out.size(); ++i) {
      ASSERT_LE(std::abs(out[i]), std::max(std::abs(h[i]), 1.0) + 1e-12);
    }
  }
}

TEST(Gru, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  GruParams<double> p("gru", 3, 4);
  p.init(rng);
  for (auto* q : p.parameters()) q->value = random_matrix(q->value.rows(), q->value.cols(), rng, 0.8);
  const auto x = random_matrix(2, 3, rng);
  const auto h = random_matrix(2, 4, rng);
  const auto w = random_matrix(4, 1, rng);
  auto build = [&](Graph<double>& g) {
    const auto vars = bind(g, p);
    const Var h1 = gru_step(g, g.constant(x), g.constant(h), vars);
    const Var h2 = gru_step(g, g.constant(x), h1, vars);
    return g.sum(g.matmul(h2, g.constant(w)));
  };
  auto f = [&] {
    Graph<double> g;
    return g.value(build(g))[0];
  };
  Graph<double> g;
  g.backward(build(g));
  for (auto* q : p.parameters()) {
    const auto analytic = q->grad;
    EXPECT_LT(oracle::relative_error(analytic, oracle::numeric_gradient(*q, f)), 1e-4) << q->name;
  }
}

TEST(Gru, InitUsesGlorotRangeAndZeroBiases) {
  Rng rng(6);
  GruParams<double> p("gru", 30, 20);
  p.init(rng);
  const double limit = std::sqrt(6.0 / 50.0);
  for (double v : p.w_z.value.values()) EXPECT_LE(std::abs(v), limit);
  for (double v : p.b_h.value.values()) EXPECT_EQ(v, 0.0);
}

TEST(Softmax, UniformLogitsGiveLogV) {
  const std::vector<double> logits(13, 0.7);
  auto s = softmax_cross_entropy(logits, 4);
  EXPECT_NEAR(s.loss, std::log(13.0), 1e-12);
}

TEST(Softmax, SaturatedLogitsStayFinite) {
  const std::vector<double> logits{1000.0, 0.0, -1000.0};
  auto s = softmax_cross_entropy(logits, 0);
  EXPECT_NEAR(s.loss, 0.0, 1e-12);
  EXPECT_NEAR(softmax_cross_entropy(logits, 2).loss, 2000.0, 1e-9);
  for (double p : s.probs) EXPECT_TRUE(std::isfinite(p));
}

TEST(Softmax, ProbabilitiesSumToOneAndAreShiftInvariant) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(9);
    for (auto& l : logits) l = (uniform01(rng) - 0.5) * 40;
    auto s = softmax_cross_entropy(logits, 3);
    double total = 0;
    for (double p : s.probs) total += p;
    EXPECT_NEAR(total, 1.0, 1e-12);
    auto shifted = logits;
    for (auto& l : shifted) l += 123.0;
    EXPECT_NEAR(softmax_cross_entropy(shifted, 3).loss, s.loss, 1e-9);
  }
  EXPECT_THROW(softmax_cross_entropy(std::vector<double>{1, 2}, 2), Error);
}

TEST(Softmax, GraphGradientIsProbabilitiesMinusOneHot) {
  Parameter<double> logits("logits", Tensor<double>::row({0.3, -1.2, 2.0, 0.0}));
  Graph<double> g;
  const std::vector<TokenId> target{2};
  g.backward(g.cross_entropy(g.parameter(logits), target));
  auto ref = softmax_cross_entropy(logits.value.values(), 2);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(logits.grad[j], ref.probs[j] - (j == 2 ? 1.0 : 0.0), 1e-14);
}

TEST(Dropout, InferenceAndZeroRateAreIdentity) {
  Rng rng(8);
  const std::vector<double> x{1.5, -2.0, 3.25};
  EXPECT_EQ(dropout(x, 0.5, false, rng), x);
  EXPECT_EQ(dropout(x, 0.0, true, rng), x);
  Graph<double> g;
  const Var v = g.constant(Tensor<double>::row(x));
  EXPECT_EQ(g.dropout(v, 0.4, false, rng).index, v.index);
  EXPECT_THROW(dropout(x, 1.0, true, rng), Error);
  EXPECT_THROW(dropout(x, -0.1, true, rng), Error);
}

TEST(Dropout, InvertedScalingKeepsTheMean) {
  Rng rng(9);
  const std::vector<double> ones(100000, 1.0);
  const auto out = dropout(ones, 0.3, true, rng);
  double total = 0;
  std::size_t dropped = 0;
  for (double v : out) {
    total += v;
    if (v == 0.0) ++dropped;
    else EXPECT_NEAR(v, 1.0 / 0.7, 1e-15);
  }
  EXPECT_NEAR(total / 1e5, 1.0, 0.01);
  EXPECT_NEAR(static_cast<double>(dropped) / 1e5, 0.3, 0.01);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Parameter<double> p("p", Tensor<double>::row({1.0, 1.0, 1.0}));
  p.grad = Tensor<double>::row({0.5, -20.0, 0.0});
  Adam<double> opt({&p});
  opt.step();
  EXPECT_NEAR(p.value[0], 1.0 - 0.001, 1e-9);
  EXPECT_NEAR(p.value[1], 1.0 + 0.001, 1e-9);
  EXPECT_EQ(p.value[2], 1.0);
  for (double g : p.grad.values()) EXPECT_EQ(g, 0.0);
  EXPECT_EQ(opt.steps(), 1u);
}

TEST(Adam, MinimisesAQuadratic) {
  Parameter<double> w("w", Tensor<double>::row({0.0}));
  Adam<double> opt({&w}, AdamConfig{.learning_rate = 0.1});
  for (int i = 0; i < 200; ++i) {
    w.grad[0] = 2 * (w.value[0] - 3.0);
    opt.step();
  }
  EXPECT_LT(std::abs(w.value[0] - 3.0), 0.05);
}

TEST(Checkpoint, ParametersRoundTripBitExact) {
  Rng rng(10);
  Parameter<double> a("a", random_matrix(3, 2, rng));
  Parameter<double> b("b", random_matrix(1, 5, rng));
  std::stringstream buf;
  write_parameters<double>(buf, {&a, &b});
  const auto stored = read_parameters(buf);
  Parameter<double> a2("a", Tensor<double>::matrix(3, 2));
  Parameter<double> b2("b", Tensor<double>::matrix(1, 5));
  assign_parameters<double>(stored, {&a2, &b2});
  EXPECT_EQ(a2.value, a.value);
  EXPECT_EQ(b2.value, b.value);

  Parameter<double> wrong("a", Tensor<double>::matrix(2, 3));
  EXPECT_THROW(assign_parameters<double>(stored, {&wrong, &b2}), Error);
  std::istringstream junk("XXXX1234");
  EXPECT_THROW(read_parameters(junk), Error);
  std::string data = buf.str();
  std::istringstream truncated(data.substr(0, data.size() / 2));
  EXPECT_THROW(read_parameters(truncated), Error);
}

}  // namespace
}  // namespace detprod::nn
