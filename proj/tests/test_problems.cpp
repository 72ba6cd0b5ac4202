#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/random.hpp"

using namespace tdvpinn;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("tdvpinn_test_" + name);
  std::ofstream(p) << body;
  return p.string();
}

BoundarySeries constant_series(double T, double horizon) {
  BoundarySeries s;
  s.t = {0.0, horizon * 2};
  s.left = s.right = {T, T};
  return s;
}

}  // namespace

TEST(Toy, ExactSolutionSatisfiesStrongForm) {
  const ProblemSpec p = make_toy_problem();
  Rng rng(1);
  const double h = 1e-4;
  for (int i = 0; i < 200; ++i) {
    const double x = rng.uniform(0.0, std::numbers::pi), t = rng.uniform(0.0, 1.0);
    // u_t = -u exactly; u_xx by differentiating the closed-form u_x
    const double u_t = -p.exact(x, t);
    const double u_xx = (p.exact_dx(x + h, t) - p.exact_dx(x - h, t)) / (2 * h);
    const double u_xx_exact = std::exp(-t) * (-1.25 * std::sin(x) * std::cos(0.5 * x) - std::cos(x) * std::sin(0.5 * x));
    EXPECT_NEAR(u_xx, u_xx_exact, 1e-7);
    EXPECT_NEAR(u_t - u_xx_exact - p.source(x, t), 0.0, 1e-9);
  }
}

TEST(Toy, DataConsistent) {
  const ProblemSpec p = make_toy_problem();
  EXPECT_EQ(p.n_time, 128);
  EXPECT_EQ(p.n_test, 20);
  EXPECT_EQ(p.n_int, 128);
  EXPECT_DOUBLE_EQ(p.dt(), 1.0 / 128);
  for (double x : {0.3, 1.0, 2.5}) EXPECT_NEAR(p.initial(x), p.exact(x, 0.0), 1e-15);
  EXPECT_NEAR(p.exact(0.0, 0.5), 0.0, 1e-15);
  EXPECT_NEAR(p.exact(std::numbers::pi, 0.5), 0.0, 1e-15);
}

TEST(MonotoneCubic, KnotsAndBounds) {
  const std::vector<double> x{0, 1, 2, 3, 4, 5}, y{0, 0.1, 3, 3.2, 3.2, 10};
  const MonotoneCubic f(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(f(x[i]), y[i]);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    for (int j = 1; j < 20; ++j) {
      const double v = f(x[i] + j / 20.0);
      EXPECT_GE(v, std::min(y[i], y[i + 1]) - 1e-14);
      EXPECT_LE(v, std::max(y[i], y[i + 1]) + 1e-14);
    }
  }
  EXPECT_EQ(f(-1.0), 0.0);
  EXPECT_EQ(f(9.0), 10.0);
  EXPECT_THROW(MonotoneCubic({0, 0, 1}, {1, 2, 3}), ValidationError);
}

TEST(MonotoneCubic, DerivativeMatchesFiniteDifference) {
  const MonotoneCubic f({0, 1, 2.5, 3, 5}, {1, 2, 2.2, 5, 5.5});
  for (double t : {0.3, 1.7, 2.7, 4.1}) {
    const double h = 1e-6;
    EXPECT_NEAR(f.derivative(t), (f(t + h) - f(t - h)) / (2 * h), 1e-6);
  }
}

TEST(PropertyTable, LoadAndValidate) {
  const std::string good = temp_file("good.csv", "# comment\nT,rho,cp,k\n-30,1000,2000,2\n-10,1000,2500,1.5\n0,1050,3000,1\n25,1100,3400,0.5\n");
  const PropertyTable t = load_property_table(good);
  EXPECT_EQ(t.T.size(), 4u);
  EXPECT_DOUBLE_EQ(t.cp_of(-10.0), 2500.0);
  EXPECT_TRUE(t.covers(-30.0, 25.0));
  EXPECT_FALSE(t.covers(-31.0, 25.0));

  EXPECT_THROW(load_property_table(temp_file("neg.csv", "T,rho,cp,k\n-30,1000,2000,2\n-10,1000,-1,1.5\n0,1,1,1\n25,1,1,1\n")),
               ValidationError);
  EXPECT_THROW(load_property_table(temp_file("order.csv", "T,rho,cp,k\n-30,1,1,1\n-40,1,1,1\n0,1,1,1\n25,1,1,1\n")),
               ValidationError);
  EXPECT_THROW(load_property_table(temp_file("hdr.csv", "T,rho,k\n1,2,3\n")), IngestionError);
  EXPECT_THROW(load_property_table(temp_file("num.csv", "T,rho,cp,k\n1,2,x,3\n")), IngestionError);
  EXPECT_THROW(load_property_table("/nonexistent/table.csv"), IngestionError);
}

TEST(PropertyTable, WriteReadRoundTrip) {
  const PropertyTable a = synthetic_property_table();
  const fs::path p = fs::temp_directory_path() / "tdvpinn_test_roundtrip.csv";
  write_property_table(a, p.string());
  const PropertyTable b = load_property_table(p.string());
  EXPECT_EQ(a.T, b.T);
  EXPECT_EQ(a.cp, b.cp);
}

TEST(Synthetic, SingleInteriorCapacityPeakNearFreezing) {
  const ProblemSpec p = make_default_coffee_problem();
  const double T_ref = p.scaling->T_ref;
  std::vector<double> c;
  const double lo = -30.0 / T_ref, hi = 25.0 / T_ref;
  for (int i = 0; i <= 2000; ++i) c.push_back(p.coeffs.C(lo + (hi - lo) * i / 2000.0));
  int maxima = 0;
  double where = 0.0;
  for (std::size_t i = 1; i + 1 < c.size(); ++i) {
    if (c[i] > c[i - 1] && c[i] >= c[i + 1]) {
      ++maxima;
      where = (lo + (hi - lo) * static_cast<double>(i) / 2000.0) * T_ref;
    }
  }
  EXPECT_EQ(maxima, 1);
  EXPECT_GT(where, -8.0);
  EXPECT_LT(where, 0.0);
}

TEST(Synthetic, PropertyTrends) {
  const PropertyTable t = synthetic_property_table();
  EXPECT_NEAR(t.rho_of(25.0), 1100.0, 5.0);
  EXPECT_NEAR(t.rho_of(-30.0), 1000.0, 5.0);
  EXPECT_LT(t.k_of(20.0), 0.6);
  EXPECT_GT(t.k_of(-30.0), 1.9);
  // energy C(u)u must increase with u for the oracle's fixed-point iteration
  const ProblemSpec p = make_default_coffee_problem();
  for (double u = -1.5; u < 1.25; u += 0.01) EXPECT_GT(p.coeffs.C(u + 0.01) * (u + 0.01), p.coeffs.C(u) * u);
}

TEST(Coffee, ConstantBoundaryValue) {
  const PropertyTable table = synthetic_property_table();
  CoffeeSettings s;
  const auto scaling = Nondimensionalization::from_table(table, s.T_initial, s.d);
  const ProblemSpec p = make_coffee_problem(table, constant_series(-25.0, scaling.to_seconds(s.t_end)), s);
  EXPECT_DOUBLE_EQ(p.boundary_left(0.1), -1.25);
  EXPECT_DOUBLE_EQ(p.boundary_right(p.t_end), -1.25);
  EXPECT_EQ(p.initial(0.5), 1.0);
}

TEST(Coffee, ReferenceValuesGiveUnitCoefficientsAtOne) {
  const ProblemSpec p = make_default_coffee_problem();
  EXPECT_NEAR(p.coeffs.C(1.0), 1.0, 1e-12);
  EXPECT_NEAR(p.coeffs.K(1.0), 1.0, 1e-12);
}

TEST(Coffee, ConstantTableReducesToLinearControl) {
  const PropertyTable table = constant_property_table(1000.0, 4000.0, 0.5);
  CoffeeSettings s;
  const auto scaling = Nondimensionalization::from_table(table, s.T_initial, s.d);
  const ProblemSpec p = make_coffee_problem(table, synthetic_boundary_series(scaling.to_seconds(s.t_end), scaling.to_seconds(s.boundary_tau)), s);
  EXPECT_TRUE(p.coeffs.constant);
  for (double u = -1.5; u <= 1.5; u += 0.1) {
    EXPECT_NEAR(p.coeffs.C(u), 1.0, 1e-10);
    EXPECT_NEAR(p.coeffs.K(u), 1.0, 1e-10);
  }
}

TEST(Scaling, IdentityAndRoundTrip) {
  const Nondimensionalization unit{20.0, 1.0, 1.0, 1.0, 1.0};
  EXPECT_EQ(unit.t0(), 1.0);
  EXPECT_EQ(unit.to_tau(3.5), 3.5);
  const auto s = Nondimensionalization::from_table(synthetic_property_table(), 20.0, 0.1);
  EXPECT_GT(s.t0(), 0.0);
  for (double T : {-25.0, -3.0, 0.0, 17.3}) EXPECT_NEAR(s.to_T(s.to_u(T)), T, 1e-12);
  EXPECT_THROW(Nondimensionalization::from_table(synthetic_property_table(), 20.0, 0.0), ConfigError);
}

TEST(Boundary, SeriesInterpolationAndCoverage) {
  const std::string path = temp_file("bc.csv", "t,T_left,T_right\n0,20,20\n10,0,10\n20,-20,-20\n");
  const BoundarySeries s = load_boundary_series(path);
  EXPECT_DOUBLE_EQ(s.at(5.0).first, 10.0);
  EXPECT_DOUBLE_EQ(s.at(5.0).second, 15.0);
  EXPECT_DOUBLE_EQ(s.at(20.0).first, -20.0);
  EXPECT_THROW(s.at(21.0), IngestionError);
  EXPECT_THROW(load_boundary_series(temp_file("bc2.csv", "t,T_left,T_right\n0,1,1\n0,1,1\n")), IngestionError);

  const PropertyTable table = synthetic_property_table();
  CoffeeSettings cs;
  EXPECT_THROW(make_coffee_problem(table, s, cs), IngestionError);
}

TEST(Boundary, SyntheticShapes) {
  const BoundarySeries smooth = synthetic_boundary_series(100.0, 10.0);
  const BoundarySeries plain = synthetic_boundary_series(100.0, 10.0, 20.0, -25.0, BoundaryShape::exponential);
  EXPECT_DOUBLE_EQ(smooth.at(0.0).first, 20.0);
  EXPECT_DOUBLE_EQ(plain.at(0.0).first, 20.0);
  EXPECT_NEAR(plain.at(10.0).first, -25.0 + 45.0 * std::exp(-1.0), 1e-9);
  EXPECT_NEAR(smooth.at(10.0).first, -25.0 + 90.0 * std::exp(-1.0), 1e-9);
  for (std::size_t i = 1; i < smooth.t.size(); ++i) EXPECT_LE(smooth.left[i], smooth.left[i - 1]);
  EXPECT_EQ(boundary_shape_from_string("exponential"), BoundaryShape::exponential);
  EXPECT_THROW(boundary_shape_from_string("step"), ConfigError);
}

TEST(Coefficients, StayWithinBounds) {
  const ProblemSpec p = make_default_coffee_problem();
  const auto& c = p.coeffs;
  EXPECT_GT(c.c_min, 0.0);
  EXPECT_GT(c.k_min, 0.0);
  for (double u = -1.5; u <= 1.25; u += 0.001) {
    EXPECT_GE(c.C(u), c.c_min - 1e-12);
    EXPECT_LE(c.C(u), c.c_max + 1e-12);
    EXPECT_GE(c.K(u), c.k_min - 1e-12);
    EXPECT_LE(c.K(u), c.k_max + 1e-12);
  }
}

TEST(Coefficients, DerivativesMatchFiniteDifferences) {
  const ProblemSpec p = make_default_coffee_problem();
  for (double u : {-1.2, -0.4, -0.15, 0.1, 0.8}) {
    const double h = 1e-7;
    EXPECT_NEAR(p.coeffs.dC(u), (p.coeffs.C(u + h) - p.coeffs.C(u - h)) / (2 * h), 1e-4 * std::max(1.0, std::abs(p.coeffs.dC(u))));
    EXPECT_NEAR(p.coeffs.dK(u), (p.coeffs.K(u + h) - p.coeffs.K(u - h)) / (2 * h), 1e-4 * std::max(1.0, std::abs(p.coeffs.dK(u))));
  }
}

TEST(Spec, Validation) {
  ProblemSpec p = make_toy_problem();
  p.b = p.a;
  EXPECT_THROW(p.validate(), ConfigError);
  EXPECT_THROW(make_toy_problem(0), ConfigError);
}
