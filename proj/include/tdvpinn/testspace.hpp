#pragma once

// Orthonormal test bases on an interval and the stratified midpoint rule used
// for every spatial integral.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/random.hpp"

namespace tdvpinn {

enum class BasisKind {
  h10_sine,   // modes k = 1..n, orthonormal under (u,v) = ∫u'v'
  h1_cosine,  // modes k = 0..n-1, orthonormal under (u,v) = ∫u'v' + ∫uv
};

inline std::string to_string(BasisKind kind) {
  return kind == BasisKind::h10_sine ? "h10" : "h1";
}

inline BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "h10" || name == "h10_sine" || name == "sine") return BasisKind::h10_sine;
  if (name == "h1" || name == "h1_cosine" || name == "cosine") return BasisKind::h1_cosine;
  throw ConfigError("unknown basis kind '" + name + "' (expected h10 or h1)");
}

struct Basis {
  BasisKind kind = BasisKind::h10_sine;
  double a = 0.0;
  double b = 1.0;
  int n_modes = 1;

  int first_mode() const noexcept { return kind == BasisKind::h10_sine ? 1 : 0; }
  int last_mode() const noexcept { return first_mode() + n_modes - 1; }
  double length() const noexcept { return b - a; }
};

/// Value and exact derivative of mode k at x.
inline std::pair<double, double> eval_basis(const Basis& basis, int k, double x) {
  if (k < basis.first_mode() || k > basis.last_mode()) {
    throw std::out_of_range("basis mode " + std::to_string(k) + " outside [" +
                            std::to_string(basis.first_mode()) + ", " +
                            std::to_string(basis.last_mode()) + "]");
  }
  const double len = basis.length();
  const double omega = k * std::numbers::pi / len;
  const double s = x - basis.a;
  if (basis.kind == BasisKind::h10_sine) {
    // sqrt(2/L) sin(omega s) has unit L2 norm; dividing by omega gives unit H1_0 norm.
    const double scale = std::sqrt(2.0 / len) / omega;
    return {scale * std::sin(omega * s), scale * omega * std::cos(omega * s)};
  }
  if (k == 0) return {1.0 / std::sqrt(len), 0.0};
  const double scale = 1.0 / std::sqrt(0.5 * len * (1.0 + omega * omega));
  return {scale * std::cos(omega * s), -scale * omega * std::sin(omega * s)};
}

struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;

  std::size_t size() const noexcept { return points.size(); }
};

inline void check_domain(double a, double b, std::size_t n_points) {
  if (!(b > a)) throw ConfigError("degenerate domain: need b > a");
  if (n_points < 2) throw ConfigError("quadrature needs at least 2 points");
}

/// One uniformly random point per cell of the uniform n-partition of (a,b).
inline QuadratureRule sample_quadrature(double a, double b, std::size_t n_points, Rng& rng) {
  check_domain(a, b, n_points);
  const double h = (b - a) / static_cast<double>(n_points);
  QuadratureRule rule;
  rule.points.resize(n_points);
  rule.weights.assign(n_points, h);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double lo = a + static_cast<double>(i) * h;
    double x = lo + h * rng.uniform();
    // keep the point strictly inside its cell and the open interval
    if (x <= a) x = a + 0.5 * h;
    rule.points[i] = x;
  }
  return rule;
}

/// Classical midpoint rule; used for diagnostics and error norms.
inline QuadratureRule midpoint_quadrature(double a, double b, std::size_t n_points) {
  check_domain(a, b, n_points);
  const double h = (b - a) / static_cast<double>(n_points);
  QuadratureRule rule;
  rule.points.resize(n_points);
  rule.weights.assign(n_points, h);
  for (std::size_t i = 0; i < n_points; ++i) {
    rule.points[i] = a + (static_cast<double>(i) + 0.5) * h;
  }
  return rule;
}

/// All modes tabulated at all quadrature points; rows are modes.
struct BasisTable {
  Eigen::MatrixXd phi;   // n_modes x n_points
  Eigen::MatrixXd dphi;  // n_modes x n_points
};

inline BasisTable tabulate(const Basis& basis, const QuadratureRule& rule) {
  const auto n_points = static_cast<Eigen::Index>(rule.size());
  BasisTable table{Eigen::MatrixXd(basis.n_modes, n_points),
                   Eigen::MatrixXd(basis.n_modes, n_points)};
  for (int m = 0; m < basis.n_modes; ++m) {
    for (Eigen::Index i = 0; i < n_points; ++i) {
      const auto [v, d] = eval_basis(basis, basis.first_mode() + m,
                                     rule.points[static_cast<std::size_t>(i)]);
      table.phi(m, i) = v;
      table.dphi(m, i) = d;
    }
  }
  return table;
}

/// Quadrature estimate of the Gram matrix in the basis' own inner product.
inline Eigen::MatrixXd gram_matrix(const Basis& basis, const QuadratureRule& rule) {
  const BasisTable table = tabulate(basis, rule);
  const Eigen::Map<const Eigen::VectorXd> w(rule.weights.data(),
                                            static_cast<Eigen::Index>(rule.size()));
  Eigen::MatrixXd gram = table.dphi * w.asDiagonal() * table.dphi.transpose();
  if (basis.kind == BasisKind::h1_cosine) {
    gram += table.phi * w.asDiagonal() * table.phi.transpose();
  }
  return gram;
}

template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) sum += rule.weights[i] * f(rule.points[i]);
  return sum;
}

}  // namespace tdvpinn
