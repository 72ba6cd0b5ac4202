#pragma once

// Post-training checks shared by the command-line tool and the acceptance program.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/metrics.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/refsolver.hpp"

namespace tdvpinn {

enum class CheckStatus { pass, fail, skipped };

inline std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    default: return "SKIP";
  }
}

struct CheckRow {
  std::string name;
  CheckStatus status = CheckStatus::skipped;
  double value = 0.0;
  double threshold = 0.0;
};

/// PASS when value < threshold (or <= when `inclusive`).
inline CheckRow below(std::string name, double value, double threshold, bool inclusive = false) {
  const bool ok = std::isfinite(value) && (inclusive ? value <= threshold : value < threshold);
  return {std::move(name), ok ? CheckStatus::pass : CheckStatus::fail, value, threshold};
}

inline CheckRow skipped(std::string name, double threshold, double value = std::nan("")) {
  return {std::move(name), CheckStatus::skipped, value, threshold};
}

inline bool all_passed(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows) {
    if (r.status == CheckStatus::fail) return false;
  }
  return true;
}

inline void write_checks(const std::vector<CheckRow>& rows, const std::string& path, const std::string& header = {}) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  if (!header.empty()) out << header << '\n';
  out << "check,status,value,threshold\n";
  for (const auto& r : rows) out << r.name << ',' << to_string(r.status) << ',' << r.value << ',' << r.threshold << '\n';
}

/// Tolerances used by the checks; the defaults are the acceptance values.
struct Tolerances {
  double rel_L2 = 0.05;
  double rel_H10 = 0.10;
  double snapshot_max_abs = 0.05;
  double loss_drop_decades = 2.0;
  double bound_slack = 1e-3;
  double oracle_rel_L2 = 0.01;
  double midpoint_agreement = 0.05;
  double max_principle = 0.02;
  std::size_t loss_block = 500;
};

/// Toy checks. `losses` empty means an untrained state: trend checks are skipped, and so is
/// the lower bound, which only holds once the previous step's error is small (its value is
/// still reported).
inline std::vector<CheckRow> validate_toy(const ProblemSpec& p, const MLPState& state, const std::vector<double>& losses,
                                          const std::vector<int>& snapshot_steps, const OracleSolution& oracle,
                                          const Tolerances& tol = {}) {
  const BCEnforcer bc = make_bc(p);
  const ErrorReport r = evaluate_against_exact(p, state, bc, p.n_test);
  const BoundCheck bound = check_error_bounds(r, tol.bound_slack);
  const QuadratureRule rule = midpoint_quadrature(p.a, p.b, kMetricPoints);
  const Snapshots net = network_snapshots(state, bc, rule);
  const Snapshots exact = exact_snapshots(p, rule);
  const Snapshots orc = oracle_snapshots(p, oracle, rule);
  const ErrorReport oracle_err = space_time_errors(orc, exact, p.dt());
  const ErrorReport agreement = space_time_errors(net, orc, p.dt());
  double snap = 0.0;
  for (int n : snapshot_steps) {
    snap = std::max(snap, (net.U.row(n - 1) - exact.U.row(n - 1)).cwiseAbs().maxCoeff());
  }
  const bool trained = !losses.empty();
  std::vector<CheckRow> rows;
  rows.push_back(below("oracle_rel_L2", oracle_err.rel_L2, tol.oracle_rel_L2));
  if (trained) {
    rows.push_back(below("lower_bound_violations", bound.violations, 0.0, true));
    rows.push_back(below("rel_L2", r.rel_L2, tol.rel_L2));
    rows.push_back(below("rel_H10", r.rel_H10, tol.rel_H10));
    rows.push_back(below("snapshot_max_abs", snap, tol.snapshot_max_abs));
    const double drop = std::log10(losses.front() / losses.back());
    rows.push_back({"loss_drop_decades", drop >= tol.loss_drop_decades ? CheckStatus::pass : CheckStatus::fail, drop,
                    tol.loss_drop_decades});
    rows.push_back(below("network_oracle_rel_L2", agreement.rel_L2, tol.rel_L2 + tol.oracle_rel_L2));
  } else {
    rows.push_back(skipped("lower_bound_violations", 0.0, bound.violations));
    rows.push_back(skipped("rel_L2", tol.rel_L2));
    rows.push_back(skipped("rel_H10", tol.rel_H10));
    rows.push_back(skipped("snapshot_max_abs", tol.snapshot_max_abs));
    rows.push_back(skipped("loss_drop_decades", tol.loss_drop_decades));
    rows.push_back(skipped("network_oracle_rel_L2", tol.rel_L2 + tol.oracle_rel_L2));
  }
  return rows;
}

/// Midpoint traces and bounds for the freezing problem.
struct CoffeeTraces {
  std::vector<double> network;         // u at the midpoint, n = 0..N
  std::vector<double> oracle;
  std::vector<double> oracle_linear;   // oracle for C = K = 1 on the same data
  double network_excess = 0.0;         // max-principle excursions
  double oracle_excess = 0.0;
  int transient_end = 0;
};

inline CoffeeTraces coffee_traces(const ProblemSpec& p, const MLPState& state, const OracleSolution& oracle,
                                  const OracleSolution& oracle_linear) {
  const BCEnforcer bc = make_bc(p);
  const double mid = 0.5 * (p.a + p.b);
  CoffeeTraces t;
  t.network = network_trace(state, bc, p, mid);
  t.oracle = oracle_trace(p, oracle, mid);
  t.oracle_linear = oracle_trace(p, oracle_linear, mid);
  const auto [lo, hi] = data_range(p);
  t.network_excess = max_principle_excess(network_snapshots(state, bc, midpoint_quadrature(p.a, p.b, kMetricPoints)).U, lo, hi);
  t.oracle_excess = max_principle_excess(oracle.U, lo, hi);
  t.transient_end = transient_end_step(p);
  return t;
}

inline std::vector<CheckRow> validate_coffee(const CoffeeTraces& t, const std::vector<double>& losses,
                                             const Tolerances& tol = {}) {
  std::vector<CheckRow> rows;
  rows.push_back(below("midpoint_network_vs_oracle", max_abs_difference(t.network, t.oracle), tol.midpoint_agreement));
  rows.push_back(below("max_principle_network", t.network_excess, tol.max_principle, true));
  rows.push_back(below("max_principle_oracle", t.oracle_excess, tol.max_principle, true));
  const LagCheck lag = check_lag(t.network, t.oracle_linear, t.transient_end);
  rows.push_back(below("lag_violations_network", lag.violations, 0.0, true));
  const LagCheck lag_oracle = check_lag(t.oracle, t.oracle_linear, t.transient_end);
  rows.push_back(below("lag_violations_oracle", lag_oracle.violations, 0.0, true));
  if (losses.size() >= 2 * tol.loss_block) {
    rows.push_back(below("loss_nondecreasing_blocks", nondecreasing_blocks(losses, tol.loss_block), 0.0, true));
  } else {
    rows.push_back(skipped("loss_nondecreasing_blocks", 0.0));
  }
  return rows;
}

}  // namespace tdvpinn
