#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "tdvpinn/autodiff.hpp"
#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/random.hpp"
#include "tdvpinn/weakform.hpp"

using namespace tdvpinn;

TEST(Tape, RecordConstant) {
  Tape t;
  const NodeId id = t.record(Op::constant, {}, 3.0, {});
  EXPECT_EQ(t.value(id), 3.0);
  EXPECT_EQ(t.size(), 1u);
}

TEST(Tape, RecordAddIsLinear) {
  Tape t;
  const NodeId a = t.input(2.0), b = t.input(5.0);
  const NodeId s = t.record(Op::add, {a, b}, t.value(a) + t.value(b), {1.0, 1.0});
  EXPECT_EQ(t.value(s), 7.0);
  const auto g = t.backward(s);
  EXPECT_EQ(g[a], 1.0);
  EXPECT_EQ(g[b], 1.0);
}

TEST(Tape, TanhPartialAtZeroIsOne) {
  Tape t;
  const NodeId a = t.input(0.0);
  const NodeId h = t.tanh(a);
  EXPECT_EQ(t.at(h).partials[0], 1.0);
  EXPECT_EQ(t.backward(h)[a], 1.0);
}

TEST(Tape, ParentOutOfRangeIsStructuralError) {
  Tape t;
  t.constant(1.0);
  EXPECT_THROW(t.record(Op::neg, {5}, 0.0, {-1.0}), StructuralError);
  EXPECT_THROW(t.record(Op::add, {0}, 0.0, {1.0, 1.0}), StructuralError);
  EXPECT_THROW(t.backward(9), StructuralError);
}

TEST(Tape, TopologicalOrder) {
  Tape t;
  Var x(t, t.input(0.3));
  Var y = tanh(x * x + 1.0) / (x - 2.0);
  (void)y;
  for (const Node& n : t.nodes()) {
    for (int j = 0; j < n.arity; ++j) EXPECT_LT(n.parents[static_cast<std::size_t>(j)], n.id);
  }
}

TEST(Backward, SquareGradient) {
  Tape t;
  Var x(t, t.input(3.0));
  Var y = x * x;
  EXPECT_DOUBLE_EQ(t.backward(y.id())[x.id()], 6.0);
  EXPECT_DOUBLE_EQ(t.backward(y.id())[y.id()], 1.0);
}

TEST(Backward, TanhAtZero) {
  Tape t;
  Var x(t, t.input(0.0));
  EXPECT_DOUBLE_EQ(t.backward(tanh(x).id())[x.id()], 1.0);
}

// Every primitive against central differences on 1000 random inputs in [-2, 2].
TEST(Backward, PrimitivesMatchFiniteDifferences) {
  struct Case {
    const char* name;
    std::function<Var(const Var&, const Var&)> f;
    std::function<double(double, double)> g;
  };
  const std::vector<Case> cases = {
      {"add", [](const Var& a, const Var& b) { return a + b; }, [](double a, double b) { return a + b; }},
      {"mul", [](const Var& a, const Var& b) { return a * b; }, [](double a, double b) { return a * b; }},
      {"neg", [](const Var& a, const Var&) { return -a; }, [](double a, double) { return -a; }},
      {"tanh", [](const Var& a, const Var&) { return tanh(a); }, [](double a, double) { return std::tanh(a); }},
      {"reciprocal", [](const Var& a, const Var& b) { return b / (a + 3.0); },
       [](double a, double b) { return b / (a + 3.0); }},
      {"power", [](const Var& a, const Var&) { return pow(a + 3.0, 2.5); },
       [](double a, double) { return std::pow(a + 3.0, 2.5); }},
  };
  Rng rng(42);
  const double h = 1e-6;
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const double a = -2.0 + 4.0 * rng.uniform(), b = -2.0 + 4.0 * rng.uniform();
      Tape t;
      Var va(t, t.input(a)), vb(t, t.input(b));
      const auto grad = t.parameter_gradient(c.f(va, vb).id());
      const double fa = (c.g(a + h, b) - c.g(a - h, b)) / (2 * h);
      const double fb = (c.g(a, b + h) - c.g(a, b - h)) / (2 * h);
      for (auto [ad, fd] : {std::pair{grad[0], fa}, std::pair{grad[1], fb}}) {
        worst = std::max(worst, std::abs(ad - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    EXPECT_LT(worst, 1e-6) << c.name;
  }
}

TEST(Backward, GradientOfSumIsSumOfGradients) {
  Tape t;
  Var x(t, t.input(0.7)), y(t, t.input(-1.2));
  Var f = tanh(x * y);
  Var g = x * x * y + 2.0;
  Var s = f + g;
  const auto gs = t.parameter_gradient(s.id());
  const auto gf = t.parameter_gradient(f.id());
  const auto gg = t.parameter_gradient(g.id());
  for (std::size_t i = 0; i < gs.size(); ++i) EXPECT_NEAR(gs[i], gf[i] + gg[i], 1e-14);
}

TEST(Backward, RepeatedEvaluationIsIdentical) {
  const auto run = [] {
    Tape t;
    Var x(t, t.input(0.4));
    Var y = tanh(x * x - 0.3) * x;
    return std::pair{std::vector<Node>(t.nodes().begin(), t.nodes().end()), t.parameter_gradient(y.id())};
  };
  const auto [n1, g1] = run();
  const auto [n2, g2] = run();
  ASSERT_EQ(n1.size(), n2.size());
  for (std::size_t i = 0; i < n1.size(); ++i) {
    EXPECT_EQ(n1[i].value, n2[i].value);
    EXPECT_EQ(n1[i].op, n2[i].op);
  }
  EXPECT_EQ(g1, g2);
}

TEST(Tape, ClearEmptiesTape) {
  Tape t;
  t.input(1.0);
  t.clear();
  EXPECT_EQ(t.size(), 0u);
  EXPECT_TRUE(t.param_ids().empty());
}

// Full toy loss on a small network: tape gradient against central differences.
TEST(Backward, ToyLossMatchesFiniteDifferences) {
  ProblemSpec p = make_toy_problem(4, 3, 8);
  const MLPState s = init_mlp(3, {1, 6, 6, 4});
  const BCEnforcer bc = make_bc(p);
  Rng rng(5);
  const WeakFormContext ctx = make_context(p, basis_for(p, p.n_test), sample_quadrature(p.a, p.b, 8, rng));
  const Eigen::VectorXd theta = flatten(s);
  Tape tape;
  const auto [loss, grad] = tape_loss_and_gradient(ctx, s.widths, theta, bc, tape);
  EXPECT_GT(loss, 0.0);
  const auto loss_at = [&](const Eigen::VectorXd& th) {
    MLPState q = s;
    unflatten(th, q);
    return loss_value(ctx, q, bc);
  };
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < theta.size(); i += 7) {
    Eigen::VectorXd up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
    EXPECT_NEAR(grad[static_cast<std::size_t>(i)], fd, 1e-5 * std::max(std::abs(fd), 1e-3)) << i;
  }
}
