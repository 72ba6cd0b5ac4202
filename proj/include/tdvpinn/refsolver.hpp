#pragma once

// Classical oracle: backward Euler in time, conservative central differences in
// space, one tridiagonal solve per step (per fixed-point iteration when the
// coefficients depend on the solution).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/problems.hpp"

namespace tdvpinn {

struct Grid1D {
  double a = 0.0, b = 1.0, t_end = 1.0;
  int n_cells = 64;
  int n_steps = 128;

  double h() const { return (b - a) / n_cells; }
  double dt() const { return t_end / n_steps; }
  double node(int j) const { return a + j * h(); }
  double time(int n) const { return n * dt(); }

  static Grid1D for_problem(const ProblemSpec& p, int n_cells, int n_steps) {
    Grid1D g{p.a, p.b, p.t_end, n_cells, n_steps};
    g.validate();
    return g;
  }

  void validate() const {
    if (n_cells < 8) throw ConfigError("oracle grid needs at least 8 cells");
    if (n_steps < 1) throw ConfigError("oracle grid needs at least one time step");
    if (!(b > a) || !(t_end > 0.0)) throw ConfigError("oracle grid needs b > a and t_end > 0");
  }
};

struct OracleSolution {
  Grid1D grid;
  Eigen::MatrixXd U;                 // (n_steps+1) x (n_cells+1)
  std::vector<int> picard_iterations;  // per step; 1 for linear solves

  /// Linear interpolation between nodes at time step n.
  double at(int n, double x) const {
    const double s = std::clamp((x - grid.a) / grid.h(), 0.0, static_cast<double>(grid.n_cells));
    const int j = std::min(static_cast<int>(s), grid.n_cells - 1);
    const double w = s - j;
    return (1.0 - w) * U(n, j) + w * U(n, j + 1);
  }

  /// Bilinear interpolation in (t, x).
  double at_time(double t, double x) const {
    const double s = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.n_steps));
    const int n = std::min(static_cast<int>(std::floor(s + 1e-9)), grid.n_steps);
    const double w = s - n;
    if (n == grid.n_steps || std::abs(w) < 1e-9) return at(n, x);
    return (1.0 - w) * at(n, x) + w * at(n + 1, x);
  }

  double midpoint(int n) const { return at(n, 0.5 * (grid.a + grid.b)); }
};

/// Solves a tridiagonal system; lower[0] and upper[n-1] are ignored.
inline std::vector<double> thomas(const std::vector<double>& lower, const std::vector<double>& diag,
                                  const std::vector<double>& upper, const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n || n == 0) {
    throw StructuralError("thomas: band lengths differ");
  }
  std::vector<double> c(n), d(n), x(n);
  c[0] = upper[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double m = diag[i] - lower[i] * c[i - 1];
    c[i] = upper[i] / m;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / m;
  }
  x[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

namespace detail {

inline Eigen::RowVectorXd initial_row(const ProblemSpec& p, const Grid1D& g) {
  Eigen::RowVectorXd u(g.n_cells + 1);
  for (int j = 0; j <= g.n_cells; ++j) u[j] = p.initial(g.node(j));
  return u;
}

/// One backward-Euler system: cap * u - dt * D(K_half) u = rhs with Dirichlet ends.
inline std::vector<double> solve_step(const Grid1D& g, const std::vector<double>& cap,
                                      const std::vector<double>& k_node, const std::vector<double>& rhs,
                                      double left, double right) {
  const int N = g.n_cells + 1;
  const double r = g.dt() / (g.h() * g.h());
  std::vector<double> lo(N, 0.0), di(N, 1.0), up(N, 0.0), b(rhs);
  for (int j = 1; j < N - 1; ++j) {
    const double kw = 0.5 * (k_node[j - 1] + k_node[j]);
    const double ke = 0.5 * (k_node[j] + k_node[j + 1]);
    lo[j] = -r * kw;
    up[j] = -r * ke;
    di[j] = cap[j] + r * (kw + ke);
  }
  b[0] = left;
  b[N - 1] = right;
  return thomas(lo, di, up, b);
}

}  // namespace detail

/// Constant coefficients only.
inline OracleSolution solve_linear(const ProblemSpec& p, const Grid1D& g) {
  if (!p.coeffs.constant) throw ConfigError("solve_linear needs constant coefficients");
  g.validate();
  const int N = g.n_cells + 1;
  const double c = p.coeffs.C(0.0);
  const std::vector<double> cap(N, c), k(N, p.coeffs.K(0.0));
  OracleSolution sol{g, Eigen::MatrixXd(g.n_steps + 1, N), {}};
  sol.U.row(0) = detail::initial_row(p, g);
  std::vector<double> rhs(N);
  for (int n = 1; n <= g.n_steps; ++n) {
    const double t = g.time(n);
    for (int j = 0; j < N; ++j) rhs[j] = c * sol.U(n - 1, j) + g.dt() * p.source(g.node(j), t);
    const auto u = detail::solve_step(g, cap, k, rhs, p.boundary_left(t), p.boundary_right(t));
    for (int j = 0; j < N; ++j) sol.U(n, j) = u[j];
    sol.picard_iterations.push_back(1);
  }
  return sol;
}

enum class PicardKind {
  conservative,  // linearize the energy C(u)u around the iterate (default)
  frozen,        // freeze C at the iterate and keep C(u^{n-1})u^{n-1} on the right
};

/// Fixed-point solve for solution-dependent C and K; K is always frozen at the iterate.
inline OracleSolution solve_nonlinear(const ProblemSpec& p, const Grid1D& g, double picard_tol = 1e-8,
                                      int picard_max = 50, PicardKind kind = PicardKind::conservative) {
  g.validate();
  if (!(picard_tol > 0.0) || picard_max < 1) throw ConfigError("Picard tolerance and cap must be positive");
  const int N = g.n_cells + 1;
  const auto& cf = p.coeffs;
  OracleSolution sol{g, Eigen::MatrixXd(g.n_steps + 1, N), {}};
  sol.U.row(0) = detail::initial_row(p, g);
  std::vector<double> old(N), it(N), cap(N), k(N), rhs(N), e_old(N);
  for (int n = 1; n <= g.n_steps; ++n) {
    const double t = g.time(n);
    const double left = p.boundary_left(t), right = p.boundary_right(t);
    for (int j = 0; j < N; ++j) {
      old[j] = it[j] = sol.U(n - 1, j);
      e_old[j] = cf.C(old[j]) * old[j];
    }
    it[0] = left;
    it[N - 1] = right;
    double change = 0.0;
    int iter = 0;
    for (iter = 1; iter <= picard_max; ++iter) {
      for (int j = 0; j < N; ++j) {
        const double u = it[j];
        const double src = g.dt() * p.source(g.node(j), t);
        k[j] = cf.K(u);
        if (kind == PicardKind::conservative) {
          const double c = cf.C(u);
          cap[j] = c + u * cf.dC(u);
          rhs[j] = cap[j] * u - (c * u - e_old[j]) + src;
        } else {
          cap[j] = cf.C(u);
          rhs[j] = e_old[j] + src;
        }
      }
      const auto next = detail::solve_step(g, cap, k, rhs, left, right);
      change = 0.0;
      for (int j = 0; j < N; ++j) {
        if (!std::isfinite(next[j])) throw ConvergenceError("non-finite oracle state", static_cast<std::size_t>(n), change);
        change = std::max(change, std::abs(next[j] - it[j]));
      }
      it = next;
      if (change < picard_tol) break;
    }
    if (iter > picard_max) {
      throw ConvergenceError("Picard iteration did not converge at step " + std::to_string(n) +
                                 " (last change " + std::to_string(change) + ")",
                             static_cast<std::size_t>(n), change);
    }
    for (int j = 0; j < N; ++j) sol.U(n, j) = it[j];
    sol.picard_iterations.push_back(iter);
  }
  return sol;
}

/// Dispatches on whether the coefficients are constant.
inline OracleSolution solve(const ProblemSpec& p, const Grid1D& g) {
  return p.coeffs.constant ? solve_linear(p, g) : solve_nonlinear(p, g);
}

/// Rows t,x,u; `stride` thins the output in both directions.
inline void write_solution(const OracleSolution& sol, const std::string& path, const std::string& header_comment = {},
                           int stride = 1) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "t,x,u\n";
  const Grid1D& g = sol.grid;
  stride = std::max(stride, 1);
  for (int n = 0; n <= g.n_steps; n += stride) {
    for (int j = 0; j <= g.n_cells; j += stride) out << g.time(n) << ',' << g.node(j) << ',' << sol.U(n, j) << '\n';
  }
}

}  // namespace tdvpinn
