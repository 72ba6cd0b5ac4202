#pragma once

// Error norms against a reference and the residual-based bound check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/refsolver.hpp"
#include "tdvpinn/testspace.hpp"
#include "tdvpinn/weakform.hpp"

namespace tdvpinn {

inline constexpr std::size_t kMetricPoints = 2048;

/// Fields u^n and du^n/dx, n = 1..N (row n-1), at the points of `rule`.
struct Snapshots {
  QuadratureRule rule;
  Eigen::MatrixXd U;
  Eigen::MatrixXd DU;
};

inline Snapshots network_snapshots(const MLPState& state, const BCEnforcer& bc, const QuadratureRule& rule) {
  const BatchForward f = forward_batch(state, bc, rule.points);
  return {rule, f.U, f.DU};
}

inline Snapshots exact_snapshots(const ProblemSpec& p, const QuadratureRule& rule) {
  if (!p.has_exact()) throw ConfigError("problem '" + p.name + "' has no closed-form solution");
  const auto P = static_cast<Eigen::Index>(rule.size());
  Snapshots s{rule, Eigen::MatrixXd(p.n_time, P), Eigen::MatrixXd(p.n_time, P)};
  for (int n = 1; n <= p.n_time; ++n) {
    for (Eigen::Index i = 0; i < P; ++i) {
      const double x = rule.points[static_cast<std::size_t>(i)];
      s.U(n - 1, i) = p.exact(x, p.time(n));
      s.DU(n - 1, i) = p.exact_dx(x, p.time(n));
    }
  }
  return s;
}

/// Oracle values interpolated linearly in space at the problem's time nodes;
/// derivatives are the slopes of that interpolant.
inline Snapshots oracle_snapshots(const ProblemSpec& p, const OracleSolution& sol, const QuadratureRule& rule) {
  const auto P = static_cast<Eigen::Index>(rule.size());
  Snapshots s{rule, Eigen::MatrixXd(p.n_time, P), Eigen::MatrixXd(p.n_time, P)};
  const Grid1D& g = sol.grid;
  const double ratio = static_cast<double>(g.n_steps) / p.n_time;
  for (int n = 1; n <= p.n_time; ++n) {
    const double sn = n * ratio;
    const int m = static_cast<int>(std::lround(sn));
    if (std::abs(sn - m) > 1e-9) throw ConfigError("oracle time steps must be a multiple of the problem's");
    for (Eigen::Index i = 0; i < P; ++i) {
      const double x = rule.points[static_cast<std::size_t>(i)];
      s.U(n - 1, i) = sol.at(m, x);
      const double pos = std::clamp((x - g.a) / g.h(), 0.0, static_cast<double>(g.n_cells));
      const int j = std::min(static_cast<int>(pos), g.n_cells - 1);
      s.DU(n - 1, i) = (sol.U(m, j + 1) - sol.U(m, j)) / g.h();
    }
  }
  return s;
}

struct ErrorReport {
  double rel_L2 = 0.0;
  double rel_H10 = 0.0;
  std::vector<double> per_step_L2;    // absolute spatial L2 error per step
  std::vector<double> per_step_H10;   // absolute spatial H1_0 seminorm error per step
  std::vector<double> dual_norm_per_step;
  double max_abs = 0.0;               // max pointwise error over all snapshots
  double M = 0.0, gamma = 0.0, C_P = 0.0;
};

struct BoundConstants {
  double C_P, M, gamma;
};

/// C_P = (b-a)/pi, M = c_max C_P^2 + dt k_max, gamma = dt k_min.
inline BoundConstants bound_constants(const ProblemSpec& p) {
  const double cp = (p.b - p.a) / std::numbers::pi;
  return {cp, p.coeffs.c_max * cp * cp + p.dt() * p.coeffs.k_max, p.dt() * p.coeffs.k_min};
}

/// Relative space-time errors with time integrals as dt-weighted step sums.
inline ErrorReport space_time_errors(const Snapshots& u, const Snapshots& ref, double dt) {
  if (u.U.rows() != ref.U.rows() || u.U.cols() != ref.U.cols() || u.rule.size() != ref.rule.size()) {
    throw StructuralError("snapshot shapes differ");
  }
  const auto P = static_cast<Eigen::Index>(u.rule.size());
  const Eigen::Map<const Eigen::RowVectorXd> w(u.rule.weights.data(), P);
  ErrorReport r;
  double e_l2 = 0.0, e_h1 = 0.0, n_l2 = 0.0, n_h1 = 0.0;
  for (Eigen::Index n = 0; n < u.U.rows(); ++n) {
    const Eigen::RowVectorXd e = u.U.row(n) - ref.U.row(n);
    const Eigen::RowVectorXd de = u.DU.row(n) - ref.DU.row(n);
    const double l2 = (e.array().square() * w.array()).sum();
    const double h1 = (de.array().square() * w.array()).sum();
    r.per_step_L2.push_back(std::sqrt(l2));
    r.per_step_H10.push_back(std::sqrt(h1));
    r.max_abs = std::max(r.max_abs, e.cwiseAbs().maxCoeff());
    e_l2 += dt * l2;
    e_h1 += dt * h1;
    n_l2 += dt * (ref.U.row(n).array().square() * w.array()).sum();
    n_h1 += dt * (ref.DU.row(n).array().square() * w.array()).sum();
  }
  if (!(n_l2 > 0.0) || !(n_h1 > 0.0)) throw ValidationError("reference norm is zero; relative error undefined");
  r.rel_L2 = std::sqrt(e_l2 / n_l2);
  r.rel_H10 = std::sqrt(e_h1 / n_h1);
  return r;
}

/// Errors against the closed form plus dual norms from a deterministic residual assembly.
inline ErrorReport evaluate_against_exact(const ProblemSpec& p, const MLPState& state, const BCEnforcer& bc,
                                          int n_test, bool lagged = false) {
  const QuadratureRule rule = midpoint_quadrature(p.a, p.b, kMetricPoints);
  const Snapshots net = network_snapshots(state, bc, rule);
  ErrorReport r = space_time_errors(net, exact_snapshots(p, rule), p.dt());
  const WeakFormContext ctx = make_context(p, basis_for(p, n_test), rule, lagged);
  r.dual_norm_per_step = dual_norms(assemble_residuals(ctx, net.U, net.DU));
  const auto k = bound_constants(p);
  r.M = k.M;
  r.gamma = k.gamma;
  r.C_P = k.C_P;
  return r;
}

struct BoundCheck {
  bool pass = true;
  int violations = 0;
  double worst_margin = 0.0;         // min over steps of (H10 error + tol - dual/M)
  std::vector<double> upper_ratio;   // H10 error * gamma / dual norm; reported only
};

/// Lower side of the error-residual equivalence, per step: dual/M <= |e|_{H1_0} + tol.
inline BoundCheck check_error_bounds(const ErrorReport& r, double tol = 1e-3) {
  if (r.per_step_H10.empty() || r.dual_norm_per_step.size() != r.per_step_H10.size()) {
    throw ConfigError("bound check needs per-step errors against an exact solution");
  }
  BoundCheck c;
  c.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < r.per_step_H10.size(); ++n) {
    const double margin = r.per_step_H10[n] + tol - r.dual_norm_per_step[n] / r.M;
    c.worst_margin = std::min(c.worst_margin, margin);
    if (margin < 0.0) ++c.violations;
    const double d = r.dual_norm_per_step[n];
    c.upper_ratio.push_back(d > 0.0 ? r.per_step_H10[n] * r.gamma / d : 0.0);
  }
  c.pass = c.violations == 0;
  return c;
}

/// Network value at x for every step, with u^0 from the initial condition prepended.
inline std::vector<double> network_trace(const MLPState& state, const BCEnforcer& bc, const ProblemSpec& p, double x) {
  const auto [u, du] = forward_with_derivative(state, bc, x);
  std::vector<double> out{p.initial(x)};
  out.insert(out.end(), u.begin(), u.end());
  return out;
}

inline std::vector<double> oracle_trace(const ProblemSpec& p, const OracleSolution& sol, double x) {
  std::vector<double> out;
  for (int n = 0; n <= p.n_time; ++n) out.push_back(sol.at_time(p.time(n), x));
  return out;
}

/// Largest excursion outside [lo, hi]; zero when everything is inside.
inline double max_principle_excess(const Eigen::MatrixXd& U, double lo, double hi) {
  const double above = U.maxCoeff() - hi;
  const double below = lo - U.minCoeff();
  return std::max({0.0, above, below});
}

/// Range spanned by the initial data and the boundary data over the horizon.
inline std::pair<double, double> data_range(const ProblemSpec& p, int samples = 1024) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i <= samples; ++i) {
    const double x = p.a + (p.b - p.a) * i / samples;
    const double t = p.t_end * i / samples;
    for (double v : {p.initial(x), p.boundary_left(t), p.boundary_right(t)}) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw StructuralError("pearson: need two equal series of length >= 2");
  const auto n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Means of consecutive non-overlapping blocks.
inline std::vector<double> block_means(const std::vector<double>& v, std::size_t block) {
  std::vector<double> out;
  for (std::size_t s = 0; s + block <= v.size(); s += block) {
    double sum = 0.0;
    for (std::size_t i = s; i < s + block; ++i) sum += v[i];
    out.push_back(sum / static_cast<double>(block));
  }
  return out;
}

struct ConsistencyPoint {
  int n_time;
  double dt;
  double max_residual;  // max over steps and modes of |r^n_k| with u^n = u*(t^n)
  double order;         // log2 of the ratio to the previous row; NaN on the first row
};

/// Residual coefficients of the exact toy solution under deterministic quadrature,
/// one row per N_time, with the observed order as the step halves.
inline std::vector<ConsistencyPoint> consistency_sweep(const std::vector<int>& n_times, int n_test = 20) {
  std::vector<ConsistencyPoint> out;
  for (int n_time : n_times) {
    const ProblemSpec p = make_toy_problem(n_time, n_test);
    const QuadratureRule rule = midpoint_quadrature(p.a, p.b, kMetricPoints);
    const Snapshots ex = exact_snapshots(p, rule);
    const ResidualMatrix R = assemble_residuals(make_context(p, basis_for(p, n_test), rule), ex.U, ex.DU);
    ConsistencyPoint c{n_time, p.dt(), R.r.cwiseAbs().maxCoeff(), std::numeric_limits<double>::quiet_NaN()};
    if (!out.empty()) c.order = std::log(out.back().max_residual / c.max_residual) / std::log(out.back().dt / c.dt);
    out.push_back(c);
  }
  return out;
}

/// Per-step dual-norm estimates for each truncation level (rows follow n_tests),
/// all from one deterministic quadrature rule.
inline Eigen::MatrixXd truncation_sweep(const ProblemSpec& p, const MLPState& state, const BCEnforcer& bc,
                                        const std::vector<int>& n_tests, bool lagged = false) {
  const QuadratureRule rule = midpoint_quadrature(p.a, p.b, kMetricPoints);
  const Snapshots net = network_snapshots(state, bc, rule);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_tests.size()), p.n_time);
  for (std::size_t i = 0; i < n_tests.size(); ++i) {
    const auto d = dual_norms(assemble_residuals(make_context(p, basis_for(p, n_tests[i]), rule, lagged), net.U, net.DU));
    for (int n = 0; n < p.n_time; ++n) out(static_cast<Eigen::Index>(i), n) = d[static_cast<std::size_t>(n)];
  }
  return out;
}

/// Count of (step, level) pairs where the estimate drops as the truncation level grows.
inline int truncation_violations(const Eigen::MatrixXd& sweep) {
  int v = 0;
  for (Eigen::Index i = 1; i < sweep.rows(); ++i) {
    for (Eigen::Index n = 0; n < sweep.cols(); ++n) {
      if (sweep(i, n) < sweep(i - 1, n)) ++v;
    }
  }
  return v;
}

/// First step at which both boundary values are within `fraction` of their total change.
inline int transient_end_step(const ProblemSpec& p, double fraction = 0.05) {
  const double l0 = p.boundary_left(0.0), r0 = p.boundary_right(0.0);
  const double l1 = p.boundary_left(p.t_end), r1 = p.boundary_right(p.t_end);
  for (int n = 0; n <= p.n_time; ++n) {
    const double t = p.time(n);
    if (std::abs(p.boundary_left(t) - l1) <= fraction * std::abs(l0 - l1) &&
        std::abs(p.boundary_right(t) - r1) <= fraction * std::abs(r0 - r1)) {
      return n;
    }
  }
  return p.n_time;
}

struct LagCheck {
  int first_step = 0;      // first step checked
  int violations = 0;      // steps where the nonlinear trace is not warmer than the control
  double min_margin = 0.0; // min over checked steps of (nonlinear - control)
};

/// The nonlinear trace lags (stays warmer than) the control at every step from `first_step` on.
inline LagCheck check_lag(const std::vector<double>& nonlinear, const std::vector<double>& control, int first_step) {
  if (nonlinear.size() != control.size()) throw StructuralError("traces differ in length");
  LagCheck c;
  c.first_step = first_step;
  c.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = static_cast<std::size_t>(std::max(first_step, 0)); n < nonlinear.size(); ++n) {
    const double m = nonlinear[n] - control[n];
    c.min_margin = std::min(c.min_margin, m);
    if (!(m > 0.0)) ++c.violations;
  }
  return c;
}

/// Block means of the loss over `block` iterations; counts blocks that fail to decrease.
inline int nondecreasing_blocks(const std::vector<double>& loss, std::size_t block) {
  const auto m = block_means(loss, block);
  int v = 0;
  for (std::size_t i = 1; i < m.size(); ++i) {
    if (!(m[i] < m[i - 1])) ++v;
  }
  return v;
}

inline double max_abs_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw StructuralError("series differ in length");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline void write_error_report(const ErrorReport& r, const std::string& path, const std::string& header_comment = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "# rel_L2=" << r.rel_L2 << " rel_H10=" << r.rel_H10 << " M=" << r.M << " gamma=" << r.gamma
      << " C_P=" << r.C_P << '\n';
  out << "n,err_L2,err_H10,dual_norm\n";
  for (std::size_t n = 0; n < r.per_step_H10.size(); ++n) {
    out << n + 1 << ',' << r.per_step_L2[n] << ',' << r.per_step_H10[n] << ','
        << (n < r.dual_norm_per_step.size() ? r.dual_norm_per_step[n] : 0.0) << '\n';
  }
}

}  // namespace tdvpinn
