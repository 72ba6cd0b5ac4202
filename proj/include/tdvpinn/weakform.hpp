#pragma once

// Backward-Euler weak residuals tested against an orthonormal basis and the
// truncated dual-norm loss built from them.
//
// For step n and mode k
//   r[n][k] = int C(u^n) u^n phi_k + dt int K(u^n) du^n phi_k'
//             - int (C(u^{n-1}) u^{n-1} + dt f(., t^n)) phi_k
// and the loss is dt * sum_{n,k} r[n][k]^2.

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdvpinn/autodiff.hpp"
#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/testspace.hpp"

namespace tdvpinn {

struct ResidualMatrix {
  Eigen::MatrixXd r;  // N_time x N_test, row n-1 holds step n
  double dt = 0.0;

  /// dt * sum of squares, summed row by row.
  double loss() const {
    double sum = 0.0;
    for (Eigen::Index n = 0; n < r.rows(); ++n) {
      for (Eigen::Index k = 0; k < r.cols(); ++k) sum += r(n, k) * r(n, k);
    }
    return dt * sum;
  }
};

/// Truncated dual norm of the step-n residual (n is 1-based).
inline double dual_norm_estimate(const ResidualMatrix& R, int n) {
  if (n < 1 || n > R.r.rows()) throw std::out_of_range("step index " + std::to_string(n) + " out of range");
  return R.r.row(n - 1).norm();
}

inline std::vector<double> dual_norms(const ResidualMatrix& R) {
  std::vector<double> out;
  for (Eigen::Index n = 0; n < R.r.rows(); ++n) out.push_back(R.r.row(n).norm());
  return out;
}

/// Everything about one quadrature sample that does not depend on the network.
struct WeakFormContext {
  const ProblemSpec* problem = nullptr;
  Basis basis;
  QuadratureRule rule;
  BasisTable table;
  Eigen::MatrixXd phi_w;   // phi scaled by the quadrature weights, K x P
  Eigen::MatrixXd dphi_w;
  Eigen::RowVectorXd u0;   // initial condition at the points
  Eigen::MatrixXd F;       // source at (x_i, t^n), N x P
  bool lagged = false;

  double dt() const { return problem->dt(); }
  Eigen::Index n_points() const { return static_cast<Eigen::Index>(rule.size()); }
};

inline Basis basis_for(const ProblemSpec& p, int n_test) { return Basis{p.basis, p.a, p.b, n_test}; }

inline WeakFormContext make_context(const ProblemSpec& problem, const Basis& basis, QuadratureRule rule,
                                    bool lagged = false) {
  WeakFormContext ctx;
  ctx.problem = &problem;
  ctx.basis = basis;
  ctx.rule = std::move(rule);
  ctx.lagged = lagged;
  ctx.table = tabulate(basis, ctx.rule);
  const Eigen::Index P = ctx.n_points();
  const Eigen::Map<const Eigen::RowVectorXd> w(ctx.rule.weights.data(), P);
  ctx.phi_w = ctx.table.phi.array().rowwise() * w.array();
  ctx.dphi_w = ctx.table.dphi.array().rowwise() * w.array();
  ctx.u0.resize(P);
  ctx.F.resize(problem.n_time, P);
  for (Eigen::Index i = 0; i < P; ++i) {
    const double x = ctx.rule.points[static_cast<std::size_t>(i)];
    ctx.u0[i] = problem.initial(x);
    for (int n = 1; n <= problem.n_time; ++n) ctx.F(n - 1, i) = problem.source(x, problem.time(n));
  }
  return ctx;
}

namespace detail {

inline Eigen::MatrixXd map_coeff(const std::function<double(double)>& f, const Eigen::MatrixXd& U) {
  Eigen::MatrixXd out(U.rows(), U.cols());
  for (Eigen::Index j = 0; j < U.cols(); ++j) {
    for (Eigen::Index i = 0; i < U.rows(); ++i) out(i, j) = f(U(i, j));
  }
  return out;
}

/// Row n holds u^{n-1}: the initial condition first, then the outputs shifted down.
inline Eigen::MatrixXd previous_states(const Eigen::RowVectorXd& u0, const Eigen::MatrixXd& U) {
  Eigen::MatrixXd prev(U.rows(), U.cols());
  prev.row(0) = u0;
  if (U.rows() > 1) prev.bottomRows(U.rows() - 1) = U.topRows(U.rows() - 1);
  return prev;
}

}  // namespace detail

/// Residual coefficients for given fields U, DU (N x P) at the context's points.
inline ResidualMatrix assemble_residuals(const WeakFormContext& ctx, const Eigen::MatrixXd& U,
                                         const Eigen::MatrixXd& DU) {
  const ProblemSpec& p = *ctx.problem;
  if (U.rows() != p.n_time || U.cols() != ctx.n_points() || DU.rows() != U.rows() || DU.cols() != U.cols()) {
    throw StructuralError("field shape does not match steps x quadrature points");
  }
  const double dt = p.dt();
  const Eigen::MatrixXd prev = detail::previous_states(ctx.u0, U);
  Eigen::MatrixXd mass, flux;
  if (p.coeffs.constant) {
    mass = p.coeffs.C(0.0) * (U - prev) - dt * ctx.F;
    flux = dt * p.coeffs.K(0.0) * DU;
  } else if (ctx.lagged) {
    const Eigen::MatrixXd Cp = detail::map_coeff(p.coeffs.C, prev);
    mass = (Cp.array() * (U - prev).array()).matrix() - dt * ctx.F;
    flux = dt * (detail::map_coeff(p.coeffs.K, prev).array() * DU.array()).matrix();
  } else {
    const Eigen::MatrixXd E = (detail::map_coeff(p.coeffs.C, U).array() * U.array()).matrix();
    const Eigen::MatrixXd Eprev = (detail::map_coeff(p.coeffs.C, prev).array() * prev.array()).matrix();
    mass = E - Eprev - dt * ctx.F;
    flux = dt * (detail::map_coeff(p.coeffs.K, U).array() * DU.array()).matrix();
  }
  ResidualMatrix R;
  R.dt = dt;
  R.r = mass * ctx.phi_w.transpose() + flux * ctx.dphi_w.transpose();
  return R;
}

struct LossEval {
  double loss = 0.0;
  ResidualMatrix residuals;
  Eigen::VectorXd grad;
  Eigen::MatrixXd U;  // network fields at the quadrature points
  Eigen::MatrixXd DU;
};

/// Loss and its exact parameter gradient via the batched network pass.
inline LossEval loss_and_gradient(const WeakFormContext& ctx, const MLPState& state, const BCEnforcer& bc) {
  const ProblemSpec& p = *ctx.problem;
  const BatchForward fwd = forward_batch(state, bc, ctx.rule.points);
  LossEval out;
  out.residuals = assemble_residuals(ctx, fwd.U, fwd.DU);
  out.loss = out.residuals.loss();
  const double dt = p.dt();
  const Eigen::MatrixXd GR = 2.0 * dt * out.residuals.r;
  const Eigen::MatrixXd GM = GR * ctx.phi_w;   // adjoint of the mass integrand
  const Eigen::MatrixXd GS = GR * ctx.dphi_w;  // adjoint of the flux integrand
  const Eigen::MatrixXd& U = fwd.U;
  const Eigen::MatrixXd& DU = fwd.DU;
  const Eigen::Index N = U.rows();
  Eigen::MatrixXd GU, GDU;
  if (p.coeffs.constant) {
    const double c = p.coeffs.C(0.0), k = p.coeffs.K(0.0);
    GU = c * GM;
    if (N > 1) GU.topRows(N - 1) -= c * GM.bottomRows(N - 1);
    GDU = dt * k * GS;
  } else if (ctx.lagged) {
    const Eigen::MatrixXd prev = detail::previous_states(ctx.u0, U);
    const Eigen::MatrixXd Cp = detail::map_coeff(p.coeffs.C, prev);
    const Eigen::MatrixXd dCp = detail::map_coeff(p.coeffs.dC, prev);
    const Eigen::MatrixXd Kp = detail::map_coeff(p.coeffs.K, prev);
    const Eigen::MatrixXd dKp = detail::map_coeff(p.coeffs.dK, prev);
    GU = (GM.array() * Cp.array()).matrix();
    if (N > 1) {
      // u^n also enters step n+1 as the lagged state
      const Eigen::ArrayXXd dmass =
          dCp.bottomRows(N - 1).array() * (U - prev).bottomRows(N - 1).array() - Cp.bottomRows(N - 1).array();
      const Eigen::ArrayXXd dflux = dt * dKp.bottomRows(N - 1).array() * DU.bottomRows(N - 1).array();
      GU.topRows(N - 1).array() +=
          GM.bottomRows(N - 1).array() * dmass + GS.bottomRows(N - 1).array() * dflux;
    }
    GDU = dt * (GS.array() * Kp.array()).matrix();
  } else {
    const Eigen::MatrixXd C = detail::map_coeff(p.coeffs.C, U);
    const Eigen::MatrixXd dC = detail::map_coeff(p.coeffs.dC, U);
    const Eigen::MatrixXd K = detail::map_coeff(p.coeffs.K, U);
    const Eigen::MatrixXd dK = detail::map_coeff(p.coeffs.dK, U);
    Eigen::MatrixXd GE = GM;
    if (N > 1) GE.topRows(N - 1) -= GM.bottomRows(N - 1);
    GU = (GE.array() * (C.array() + dC.array() * U.array()) + GS.array() * dt * dK.array() * DU.array()).matrix();
    GDU = dt * (GS.array() * K.array()).matrix();
  }
  out.grad = backward_batch(state, fwd, GU, GDU);
  out.U = fwd.U;
  out.DU = fwd.DU;
  return out;
}

/// Loss only (no gradient), batched.
inline double loss_value(const WeakFormContext& ctx, const MLPState& state, const BCEnforcer& bc) {
  const BatchForward fwd = forward_batch(state, bc, ctx.rule.points);
  return assemble_residuals(ctx, fwd.U, fwd.DU).loss();
}

/// Single coefficient r[n][k] for any scalar type; m is the 0-based mode row of the basis table.
template <class S>
S residual_coefficient(const WeakFormContext& ctx, int n, int m, const std::vector<S>& u_prev,
                       const std::vector<S>& u_n, const std::vector<S>& du_n) {
  const ProblemSpec& p = *ctx.problem;
  const auto P = static_cast<std::size_t>(ctx.n_points());
  if (u_prev.size() != P || u_n.size() != P || du_n.size() != P) {
    throw StructuralError("residual_coefficient: field length differs from quadrature size");
  }
  if (n < 1 || n > p.n_time) throw StructuralError("residual_coefficient: step out of range");
  if (m < 0 || m >= ctx.basis.n_modes) throw StructuralError("residual_coefficient: mode out of range");
  const double dt = p.dt();
  const auto& C = p.coeffs.C;
  const auto& dC = p.coeffs.dC;
  const auto& K = p.coeffs.K;
  const auto& dK = p.coeffs.dK;
  S sum = lift(0.0, u_n[0]);
  for (std::size_t i = 0; i < P; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double phi = ctx.phi_w(m, ii);
    const double dphi = ctx.dphi_w(m, ii);
    const S& coeff_at = ctx.lagged ? u_prev[i] : u_n[i];
    const S c_now = apply_unary(C, dC, coeff_at);
    const S k_now = apply_unary(K, dK, coeff_at);
    S mass = lift(0.0, u_n[0]);
    if (ctx.lagged) {
      mass = c_now * (u_n[i] - u_prev[i]);
    } else {
      mass = c_now * u_n[i] - apply_unary(C, dC, u_prev[i]) * u_prev[i];
    }
    mass = mass - dt * ctx.F(n - 1, ii);
    sum = sum + phi * mass + dphi * (dt * k_now * du_n[i]);
  }
  return sum;
}

/// Loss through the generic path: dt * sum over steps and modes of r^2.
/// U[n-1][i], DU[n-1][i] are the network fields; the initial state comes from the context.
template <class S>
S total_loss(const WeakFormContext& ctx, const std::vector<std::vector<S>>& U,
             const std::vector<std::vector<S>>& DU, ResidualMatrix* residuals = nullptr) {
  const ProblemSpec& p = *ctx.problem;
  if (static_cast<int>(U.size()) != p.n_time || DU.size() != U.size()) {
    throw StructuralError("total_loss: expected one field per time step");
  }
  std::vector<S> u0;
  for (Eigen::Index i = 0; i < ctx.n_points(); ++i) u0.push_back(lift(ctx.u0[i], U[0][0]));
  if (residuals) {
    residuals->dt = p.dt();
    residuals->r.resize(p.n_time, ctx.basis.n_modes);
  }
  S sum = lift(0.0, U[0][0]);
  for (int n = 1; n <= p.n_time; ++n) {
    const std::vector<S>& prev = n == 1 ? u0 : U[static_cast<std::size_t>(n - 2)];
    for (int m = 0; m < ctx.basis.n_modes; ++m) {
      const S r = residual_coefficient(ctx, n, m, prev, U[static_cast<std::size_t>(n - 1)],
                                       DU[static_cast<std::size_t>(n - 1)]);
      if (residuals) residuals->r(n - 1, m) = value_of(r);
      sum = sum + r * r;
    }
  }
  return p.dt() * sum;
}

/// Builds the loss on a fresh tape with the given parameters as trainable leaves.
/// Returns the loss value and its gradient in flatten() order.
inline std::pair<double, std::vector<double>> tape_loss_and_gradient(const WeakFormContext& ctx,
                                                                     const std::vector<int>& widths,
                                                                     const Eigen::VectorXd& theta,
                                                                     const BCEnforcer& bc, Tape& tape) {
  tape.clear();
  std::vector<Var> params;
  params.reserve(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) params.emplace_back(tape, tape.input(theta[i]));
  const auto N = static_cast<std::size_t>(ctx.problem->n_time);
  std::vector<std::vector<Var>> U(N), DU(N);
  for (std::size_t i = 0; i < ctx.rule.size(); ++i) {
    const Var x(tape, tape.constant(ctx.rule.points[i]));
    auto [u, du] = forward_with_derivative<Var>(widths, params, bc, x);
    for (std::size_t n = 0; n < N; ++n) {
      U[n].push_back(u[n]);
      DU[n].push_back(du[n]);
    }
  }
  const Var loss = total_loss<Var>(ctx, U, DU);
  return {loss.value(), tape.parameter_gradient(loss.id())};
}

/// CSV with columns n,k,r (1-based step, basis mode number).
inline void write_residuals(const ResidualMatrix& R, const Basis& basis, const std::string& path,
                            const std::string& header_comment = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header_comment.empty()) out << header_comment << '\n';
  out << "n,k,r\n";
  for (Eigen::Index n = 0; n < R.r.rows(); ++n) {
    for (Eigen::Index m = 0; m < R.r.cols(); ++m) {
      out << n + 1 << ',' << basis.first_mode() + m << ',' << R.r(n, m) << '\n';
    }
  }
}

}  // namespace tdvpinn
