// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "dvae/autodiff/graph.hpp"
#include "dvae/autodiff/layers.hpp"
#include "dvae/autodiff/tensor.hpp"
#include "dvae/errors.hpp"
#include "dvae/geometry.hpp"
#include "dvae/rng.hpp"

namespace dvae::autodiff {
namespace {

TEST(Tensor, ShapeAndDataMustAgree) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeMismatch);
  const Tensor t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rank(), 2u);
  EXPECT_TRUE(std::all_of(t.values().begin(), t.values().end(), [](double v) { return v == 0; }));
  EXPECT_EQ(shape_string({2, 3}), "[2, 3]");
}

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::vector({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(ParameterSet, KeepsInsertionOrderAndRejectsDuplicates) {
  ParameterSet p;
  p.add("b", Tensor::scalar(1.0));
  p.add("a", Tensor::vector({1.0, 2.0}));
  EXPECT_EQ(p.names(), (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(p.index_of("a"), 1u);
  EXPECT_EQ(p.scalar_count(), 3u);
  EXPECT_THROW(p.add("a", Tensor::scalar(0.0)), std::invalid_argument);
  EXPECT_THROW(p.index_of("c"), std::out_of_range);
  const ParameterSet z = p.zeros_like();
  EXPECT_EQ(z.names(), p.names());
  EXPECT_EQ(z.at("a"), Tensor::vector({0.0, 0.0}));
}

TEST(Forward, IdentityGraph) {
  Graph g;
  const NodeId x = g.input("x", {3});
  g.mark_output("y", x);
  const auto out = g.forward({{"x", Tensor::vector({1.0, -2.0, 3.5})}});
  EXPECT_EQ(out.at("y"), Tensor::vector({1.0, -2.0, 3.5}));
}

TEST(Forward, IdentityAffine) {
  Graph g;
  const NodeId x = g.input("x", {2});
  const NodeId w = g.parameter("W", Tensor({2, 2}, {1.0, 0.0, 0.0, 1.0}));
  const NodeId b = g.parameter("b", Tensor::vector({0.0, 0.0}));
  g.mark_output("y", g.affine(w, x, b));
  const auto out = g.forward({{"x", Tensor::vector({0.25, -4.0})}});
  EXPECT_EQ(out.at("y"), Tensor::vector({0.25, -4.0}));
}

TEST(Forward, HandComputedTwoLayerNet) {
  // tanh([1, 0.6]) . (1, -1) + 0.1, evaluated by hand.
  Graph g;
  const NodeId x = g.input("x", {2});
  const NodeId h = g.tanh(g.affine(g.parameter("W1", Tensor({2, 2}, {1.0, 2.0, 3.0, 4.0})), x,
                                   g.parameter("b1", Tensor::vector({0.5, -0.5}))));
  const NodeId y = g.affine(g.parameter("W2", Tensor({1, 2}, {1.0, -1.0})), h,
                            g.parameter("b2", Tensor::vector({0.1})));
  g.mark_output("y", y);
  const auto out = g.forward({{"x", Tensor::vector({0.1, 0.2})}});
  EXPECT_NEAR(out.at("y")[0], 0.32454458895772953, 1e-15);
}

TEST(Forward, Errors) {
  Graph g;
  const NodeId x = g.input("x", {2});
  g.mark_output("y", g.log(x));
  EXPECT_THROW(g.forward({}), std::out_of_range);
  EXPECT_THROW(g.forward({{"x", Tensor::vector({1.0, 2.0, 3.0})}}), ShapeMismatch);
  EXPECT_THROW(g.forward({{"x", Tensor::vector({1.0, 0.0})}}), NonFiniteValue);
  EXPECT_THROW(g.add(x, g.constant(Tensor::vector({1.0, 2.0, 3.0}))), ShapeMismatch);
  EXPECT_THROW(g.affine(g.constant(Tensor({2, 3})), x), ShapeMismatch);
}

TEST(NodeKinds, ForwardValues) {
  Graph g;
  const NodeId x = g.input("x", {2});
  g.mark_output("softplus", g.softplus(x));
  g.mark_output("relu", g.relu(x));
  g.mark_output("abs", g.abs(x));
  g.mark_output("sum", g.sum(x));
  g.mark_output("sqnorm", g.squared_norm(x));
  g.mark_output("scale", g.scale(x, 3.0));
  g.mark_output("bcast", g.mul(x, g.constant(Tensor::scalar(2.0))));
  const auto out = g.forward({{"x", Tensor::vector({0.0, -2.0})}});
  EXPECT_NEAR(out.at("softplus")[0], std::numbers::ln2, 1e-15);
  EXPECT_EQ(out.at("relu"), Tensor::vector({0.0, 0.0}));
  EXPECT_EQ(out.at("abs"), Tensor::vector({0.0, 2.0}));
  EXPECT_EQ(out.at("sum"), Tensor::scalar(-2.0));
  EXPECT_EQ(out.at("sqnorm"), Tensor::scalar(4.0));
  EXPECT_EQ(out.at("scale"), Tensor::vector({0.0, -6.0}));
  EXPECT_EQ(out.at("bcast"), Tensor::vector({0.0, -4.0}));
}

TEST(Backward, IdentitySeedOne) {
  Graph g;
  const NodeId x = g.input("x", {1});
  g.forward({{"x", Tensor::vector({5.0})}});
  g.backward(x);
  EXPECT_EQ(g.gradient(x), Tensor::vector({1.0}));
}

TEST(Backward, SquaredNorm) {
  Graph g;
  const NodeId x = g.input("x", {2});
  const NodeId y = g.squared_norm(x);
  g.forward({{"x", Tensor::vector({3.0, 4.0})}});
  g.backward(y);
  EXPECT_EQ(g.gradient(x), Tensor::vector({6.0, 8.0}));
}

TEST(Backward, AbsSignRuleAndZeroSubgradient) {
  Graph g;
  const NodeId x = g.input("x", {3});
  const NodeId y = g.abs(x);
  g.forward({{"x", Tensor::vector({-2.0, 0.0, 1.5})}});
  g.backward(y, Tensor::vector({1.0, 1.0, 1.0}));
  EXPECT_EQ(g.gradient(x), Tensor::vector({-1.0, 0.0, 1.0}));
}

TEST(Backward, SphereProjectionDelegatesToGeometry) {
  Graph g;
  const NodeId x = g.input("x", {2});
  const NodeId u = g.sphere_project(x);
  g.forward({{"x", Tensor::vector({3.0, 4.0})}});
  EXPECT_NEAR(g.value(u)[0], 0.6, 1e-15);
  EXPECT_NEAR(g.value(u)[1], 0.8, 1e-15);
  const Tensor seed = Tensor::vector({0.3, -1.1});
  g.backward(u, seed);
  const auto j = geometry::project_jacobian(std::vector<double>{3.0, 4.0});
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(g.gradient(x)[c], j(0, c) * seed[0] + j(1, c) * seed[1], 1e-15);
  }
}

TEST(Backward, SphereProjectionGradientIsTangent) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.uniform_index(7);
    Graph g;
    const NodeId x = g.input("x", {k});
    const NodeId u = g.sphere_project(x);
    Tensor xv({k}), seed({k});
    for (std::size_t i = 0; i < k; ++i) {
      xv[i] = 3.0 * rng.normal();
      seed[i] = 10.0 * rng.normal();
    }
    g.set_input(x, xv.data());
    g.evaluate();
    g.backward(u, seed);
    double dot = 0.0;
    for (std::size_t i = 0; i < k; ++i) dot += g.gradient(x)[i] * g.value(u)[i];
    EXPECT_NEAR(dot, 0.0, 1e-8);
  }
}

TEST(Backward, RejectsSeedOfWrongShape) {
  Graph g;
  const NodeId x = g.input("x", {2});
  g.forward({{"x", Tensor::vector({1.0, 2.0})}});
  EXPECT_THROW(g.backward(x, Tensor::vector({1.0})), ShapeMismatch);
}

TEST(Backward, RepeatedCallsDoNotAccumulate) {
  Graph g;
  const NodeId x = g.input("x", {2});
  const NodeId y = g.squared_norm(x);
  g.forward({{"x", Tensor::vector({1.0, 2.0})}});
  g.backward(y);
  g.backward(y);
  EXPECT_EQ(g.gradient(x), Tensor::vector({2.0, 4.0}));
}

// A random graph of width <= 8 that uses every node kind once along its main
// path, in random order, and ends in a scalar.
struct RandomGraph {
  Graph graph;
  NodeId x;
  NodeId output;
};

RandomGraph make_random_graph(Rng& rng) {
  RandomGraph r;
  Graph& g = r.graph;
  auto width = [&] { return 2 + rng.uniform_index(7); };
  auto random_tensor = [&](Shape shape, double scale) {
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = scale * rng.normal();
    return t;
  };
  std::size_t n = width();
  const std::size_t input_width = n;
  r.x = g.input("x", {n});
  std::size_t params = 0;
  auto param = [&](Shape shape, double scale) {
    return g.parameter("p" + std::to_string(params++), random_tensor(std::move(shape), scale));
  };

  NodeId cur = g.affine(param({n, n}, 0.7), r.x, param({n}, 0.3));
  std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
  std::shuffle(order.begin(), order.end(), rng);
  for (int op : order) {
    switch (op) {
      case 0: cur = g.tanh(cur); break;
      case 1: cur = g.relu(g.add(cur, g.constant(Tensor::scalar(0.5)))); break;
      case 2: cur = g.softplus(cur); break;
      case 3: cur = g.add(cur, param({n}, 0.5)); break;
      case 4: cur = g.sub(cur, param({n}, 0.5)); break;
      case 5: cur = g.mul(cur, param({n}, 1.0)); break;
      case 6: cur = g.mul(cur, param({1}, 1.0)); break;
      case 7: cur = g.scale(cur, 1.0 + rng.uniform()); break;
      case 8: cur = g.sphere_project(g.add(cur, param({n}, 1.0))); break;
      case 9: cur = g.log(g.add(g.softplus(cur), g.constant(Tensor::scalar(0.1)))); break;
      case 10: cur = g.abs(g.add(cur, g.constant(Tensor::scalar(0.25)))); break;
      case 11: cur = g.sqrt(g.add(g.squared_norm(cur), g.constant(Tensor::scalar(1.0))));
               cur = g.mul(param({n}, 1.0), cur);
               break;
      case 12: {
        const std::size_t m = width();
        cur = g.affine(param({m, n}, 0.7), cur, param({m}, 0.3));
        n = m;
        break;
      }
      case 13: {
        const NodeId s = g.sum(cur);
        cur = g.add(cur, g.scale(s, 0.1));
        break;
      }
    }
  }
  r.output = g.add(g.sum(cur), g.scale(g.squared_norm(cur), 0.5));
  Tensor xv({input_width});
  for (double& v : xv.data()) v = rng.normal();
  g.set_input(r.x, xv.data());
  return r;
}

TEST(GradientCheck, RandomGraphsAgreeWithCentralDifferences) {
  Rng rng(2024);
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    RandomGraph r = make_random_graph(rng);
    Graph& g = r.graph;
    g.evaluate();
    g.backward(r.output);
    std::size_t checked = 0;
    for (NodeId p : g.parameters()) {
      const Tensor analytic = g.gradient(p);
      Tensor value = g.value(p);
      ASSERT_EQ(analytic.shape(), value.shape());
      for (std::size_t i = 0; i < value.size(); ++i) {
        const double saved = value[i];
        value[i] = saved + h;
        g.set_parameter(p, value);
        g.evaluate();
        const double up = g.value(r.output)[0];
        value[i] = saved - h;
        g.set_parameter(p, value);
        g.evaluate();
        const double down = g.value(r.output)[0];
        value[i] = saved;
        g.set_parameter(p, value);
        const double fd = (up - down) / (2 * h);
        const double tol = std::max(1e-4 * std::max(std::abs(fd), std::abs(analytic[i])), 1e-7);
        EXPECT_NEAR(analytic[i], fd, tol)
            << "graph " << trial << " parameter " << g.parameter_name(p) << "[" << i << "]";
        ++checked;
      }
    }
    EXPECT_GT(checked, 0u);
  }
}

TEST(Determinism, IdenticalSeedsGiveBitIdenticalResults) {
  auto run = [] {
    Rng rng(77);
    RandomGraph r = make_random_graph(rng);
    r.graph.evaluate();
    r.graph.backward(r.output);
    std::vector<double> out{r.graph.value(r.output)[0]};
    for (NodeId p : r.graph.parameters()) {
      const auto& gr = r.graph.gradient(p).values();
      out.insert(out.end(), gr.begin(), gr.end());
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(Layers, GlorotBoundsAndZeroBias) {
  Rng rng(3);
  ParameterSet p;
  init_dense(p, "l", 20, 30, true, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  const Tensor& w = p.at("l.W");
  EXPECT_EQ(w.shape(), (Shape{30, 20}));
  double max_abs = 0.0;
  for (double v : w.values()) max_abs = std::max(max_abs, std::abs(v));
  EXPECT_LE(max_abs, bound);
  EXPECT_GT(max_abs, 0.8 * bound);
  EXPECT_EQ(p.at("l.b"), Tensor({30}));
  ParameterSet q;
  init_dense(q, "m", 3, 2, false, rng);
  EXPECT_FALSE(q.contains("m.b"));
}

TEST(Layers, MlpMatchesManualComposition) {
  Rng rng(4);
  ParameterSet p;
  init_mlp(p, "net", 3, {4, 5}, rng);
  for (auto& t : p.tensors())
    for (double& v : t.data()) v += 0.1 * rng.normal();
  Graph a;
  const NodeId xa = a.input("x", {3});
  const NodeId ya = mlp(a, xa, "net", 2, p, Activation::tanh);
  Graph b;
  const NodeId xb = b.input("x", {3});
  const NodeId h = b.tanh(b.affine(b.parameter("w0", p.at("net.0.W")), xb,
                                   b.parameter("b0", p.at("net.0.b"))));
  const NodeId yb = b.tanh(b.affine(b.parameter("w1", p.at("net.1.W")), h,
                                    b.parameter("b1", p.at("net.1.b"))));
  const std::vector<double> x{0.3, -0.2, 0.9};
  a.set_input(xa, x);
  b.set_input(xb, x);
  a.evaluate();
  b.evaluate();
  EXPECT_EQ(a.value(ya), b.value(yb));
}

TEST(Graph, LoadParametersByName) {
  ParameterSet p;
  p.add("w", Tensor::vector({1.0, 2.0}));
  Graph g;
  const NodeId w = g.parameter("w", Tensor::vector({0.0, 0.0}));
  const NodeId y = g.sum(w);
  g.load_parameters(p);
  g.evaluate();
  EXPECT_EQ(g.value(y)[0], 3.0);
  EXPECT_EQ(g.find_parameter("w"), w);
  ParameterSet bad;
  bad.add("w", Tensor::vector({1.0}));
  EXPECT_THROW(g.load_parameters(bad), ShapeMismatch);
}

}  // namespace
}  // namespace dvae::autodiff
