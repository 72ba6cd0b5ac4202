// tdvpinn: train, validate, oracle and sweep commands.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "tdvpinn/config.hpp"
#include "tdvpinn/errors.hpp"
#include "tdvpinn/io.hpp"
#include "tdvpinn/metrics.hpp"
#include "tdvpinn/refsolver.hpp"
#include "tdvpinn/training.hpp"
#include "tdvpinn/validation.hpp"

namespace fs = std::filesystem;
using namespace tdvpinn;

namespace {

// Flags that map one-to-one onto config keys.
const std::vector<std::string> kKeyFlags = {
    "problem",        "seed",           "quadrature-seed", "hidden-layers",       "hidden-width",   "iterations",
    "schedule",       "lr",             "decay-rate",      "decay-steps",         "n-time",         "n-test",
    "n-int",          "basis",          "properties",      "boundary",            "length",         "t-end",
    "boundary-tau",   "boundary-shape", "out-dir",         "checkpoint-every",    "residual-every", "snapshot-steps",
    "oracle-cells",   "oracle-steps"};

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  bool fixed_quadrature = false;
  bool lagged_coefficients = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "key = value config file; flags override it");
  cmd->add_option("--set", args.sets, "extra key=value override (repeatable)");
  for (const auto& key : kKeyFlags) cmd->add_option("--" + key, args.values[key]);
  cmd->add_flag("--fixed-quadrature", args.fixed_quadrature, "keep one quadrature sample for all iterations");
  cmd->add_flag("--lagged-coefficients", args.lagged_coefficients, "evaluate C and K at the previous step");
}

RunConfig resolve(const CommonArgs& args) {
  RunConfig c;
  if (!args.config_file.empty()) load_config_file(args.config_file, c);
  for (const auto& [key, value] : args.values) {
    if (!value.empty()) apply_setting(c, key, value);
  }
  for (const auto& kv : args.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.fixed_quadrature) c.fixed_quadrature = true;
  if (args.lagged_coefficients) c.lagged_coefficients = true;
  return resolve_defaults(c);
}

std::string out_path(const RunConfig& c, const std::string& name) { return (fs::path(c.out_dir) / name).string(); }

void write_config(const RunConfig& c) {
  std::ofstream out(out_path(c, "config.txt"));
  out << header_comment(c) << '\n' << canonical(c);
}

Grid1D oracle_grid(const RunConfig& c, const ProblemSpec& p) { return Grid1D::for_problem(p, c.oracle_cells, c.oracle_steps); }

/// Snapshots on 129 uniform points, with the closed form alongside when it exists.
void write_snapshots(const RunConfig& c, const ProblemSpec& p, const MLPState& state) {
  const BCEnforcer bc = make_bc(p);
  std::vector<std::vector<double>> rows;
  const int samples = 128;
  for (int i = 0; i <= samples; ++i) {
    const double x = p.a + (p.b - p.a) * i / samples;
    const auto [u, du] = forward_with_derivative(state, bc, x);
    for (int n : c.snapshot_steps) {
      const double t = p.time(n);
      std::vector<double> row{static_cast<double>(n), t, x, u[static_cast<std::size_t>(n - 1)]};
      if (p.has_exact()) row.push_back(p.exact(x, t));
      rows.push_back(std::move(row));
    }
  }
  std::vector<std::string> cols{"n", "t", "x", "u"};
  if (p.has_exact()) cols.push_back("u_exact");
  write_table(out_path(c, "snapshots.csv"), header_comment(c), cols, rows);
}

void write_midpoint(const RunConfig& c, const ProblemSpec& p, const std::vector<double>& network,
                    const std::vector<double>& oracle = {}, const std::vector<double>& control = {}) {
  std::vector<std::vector<double>> rows;
  const double T_ref = p.scaling ? p.scaling->T_ref : 1.0;
  for (std::size_t n = 0; n < network.size(); ++n) {
    std::vector<double> row{static_cast<double>(n), p.time(static_cast<int>(n)), network[n], network[n] * T_ref};
    if (!oracle.empty()) row.insert(row.end(), {oracle[n], control[n]});
    rows.push_back(std::move(row));
  }
  std::vector<std::string> cols{"n", "t", "u", "T_celsius"};
  if (!oracle.empty()) cols.insert(cols.end(), {"u_oracle", "u_linear_control"});
  write_table(out_path(c, "midpoint.csv"), header_comment(c), cols, rows);
}

std::vector<double> read_losses(const std::string& path) {
  std::vector<double> out;
  for (const auto& row : detail::read_numeric_csv(path, {"iteration", "lr", "loss"})) out.push_back(row.at(2));
  return out;
}

int cmd_train(const CommonArgs& args) {
  const RunConfig c = resolve(args);
  const ProblemSpec p = build_problem(c);
  fs::create_directories(c.out_dir);
  write_config(c);
  const std::string header = header_comment(c);
  const std::string stamp = header.substr(2);
  TrainOptions opt = train_options(c);

  std::vector<HistoryRow> partial;
  const auto on_checkpoint = [&](long it, const MLPState& s) {
    write_checkpoint(s, out_path(c, "checkpoint_" + std::to_string(it) + ".txt"), stamp);
    write_checkpoint(s, out_path(c, "checkpoint.txt"), stamp);
  };
  const Basis basis = basis_for(p, p.n_test);
  const auto on_iteration = [&](long it, const LossEval& ev) {
    partial.push_back({it, schedule_lr(opt.schedule, it), ev.loss});
    if (c.residual_every > 0 && (it + 1) % c.residual_every == 0) {
      write_residuals(ev.residuals, basis, out_path(c, "residuals_" + std::to_string(it + 1) + ".csv"), header);
    }
  };
  TrainResult res;
  try {
    res = train(p, opt, on_checkpoint, on_iteration);
  } catch (const DivergenceError& e) {
    write_history(partial, out_path(c, "history.csv"), header);
    std::cerr << "diverged: " << e.what() << "; last checkpoint kept in " << c.out_dir << '\n';
    return 3;
  }
  write_history(res.history, out_path(c, "history.csv"), header);
  write_timing(res.seconds, out_path(c, "timing.csv"), header);
  write_snapshots(c, p, res.state);

  double seconds = 0.0;
  for (double s : res.seconds) seconds += s;
  std::cout << "config " << config_hash(c) << ": " << c.iterations << " iterations in " << seconds << " s\n";
  if (!res.history.empty()) {
    std::cout << "loss " << res.history.front().loss << " -> " << res.history.back().loss << '\n';
  }
  if (p.has_exact()) {
    const ErrorReport r = evaluate_against_exact(p, res.state, make_bc(p), p.n_test, c.lagged_coefficients);
    write_error_report(r, out_path(c, "errors.csv"), header);
    std::cout << "rel_L2 " << r.rel_L2 << " rel_H10 " << r.rel_H10 << " max_abs " << r.max_abs << '\n';
  } else {
    write_midpoint(c, p, network_trace(res.state, make_bc(p), p, 0.5 * (p.a + p.b)));
  }
  return 0;
}

int cmd_validate(const CommonArgs& args, std::string checkpoint, std::string history) {
  RunConfig c = resolve(args);
  // Without an explicit config file, reuse the one written by `train` so the problem matches.
  const std::string saved = out_path(c, "config.txt");
  if (args.config_file.empty() && fs::exists(saved)) {
    CommonArgs with_saved = args;
    with_saved.config_file = saved;
    c = resolve(with_saved);
  }
  const ProblemSpec p = build_problem(c);
  if (checkpoint.empty()) checkpoint = out_path(c, "checkpoint.txt");
  if (history.empty()) history = out_path(c, "history.csv");
  if (!fs::exists(checkpoint)) throw IngestionError("missing checkpoint '" + checkpoint + "'");
  const MLPState state = read_checkpoint(checkpoint);
  if (state.out_dim() != p.n_time) throw ConfigError("checkpoint output width differs from N_time");
  const std::vector<double> losses = fs::exists(history) ? read_losses(history) : std::vector<double>{};
  fs::create_directories(c.out_dir);

  std::vector<CheckRow> rows;
  if (c.is_toy()) {
    rows = validate_toy(p, state, losses, c.snapshot_steps, solve(p, oracle_grid(c, p)));
  } else {
    const Grid1D g = oracle_grid(c, p);
    const CoffeeTraces t = coffee_traces(p, state, solve(p, g), solve_linear(linear_control(p), g));
    rows = validate_coffee(t, losses);
    write_midpoint(c, p, t.network, t.oracle, t.oracle_linear);
  }
  write_checks(rows, out_path(c, "validation.csv"), header_comment(c));
  for (const auto& r : rows) std::cout << to_string(r.status) << ' ' << r.name << ' ' << r.value << " (" << r.threshold << ")\n";
  return all_passed(rows) ? 0 : 1;
}

int cmd_oracle(const CommonArgs& args, int stride) {
  const RunConfig c = resolve(args);
  const ProblemSpec p = build_problem(c);
  fs::create_directories(c.out_dir);
  const std::string header = header_comment(c);
  const Grid1D g = oracle_grid(c, p);
  const OracleSolution sol = solve(p, g);
  write_solution(sol, out_path(c, "oracle.csv"), header, stride);
  std::vector<std::vector<double>> iters;
  for (std::size_t n = 0; n < sol.picard_iterations.size(); ++n) {
    iters.push_back({static_cast<double>(n + 1), static_cast<double>(sol.picard_iterations[n])});
  }
  write_table(out_path(c, "picard.csv"), header, {"n", "iterations"}, iters);
  int worst = 0;
  for (int k : sol.picard_iterations) worst = std::max(worst, k);
  std::cout << "oracle " << g.n_cells << " cells x " << g.n_steps << " steps, max fixed-point iterations " << worst << '\n';

  if (p.has_exact()) {
    const QuadratureRule rule = midpoint_quadrature(p.a, p.b, kMetricPoints);
    const ErrorReport r = space_time_errors(oracle_snapshots(p, sol, rule), exact_snapshots(p, rule), p.dt());
    std::cout << "rel_L2 vs exact " << r.rel_L2 << " rel_H10 " << r.rel_H10 << '\n';
  } else {
    const OracleSolution lin = solve_linear(linear_control(p), g);
    const double mid = 0.5 * (p.a + p.b);
    write_midpoint(c, p, oracle_trace(p, sol, mid), oracle_trace(p, sol, mid), oracle_trace(p, lin, mid));
  }
  if (p.coeffs.constant) {
    const OracleSolution nl = solve_nonlinear(p, g);
    std::cout << "linear vs fixed-point path max difference " << (nl.U - sol.U).cwiseAbs().maxCoeff() << '\n';
  }
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& kind, std::vector<int> levels, std::string checkpoint,
              int states) {
  const RunConfig c = resolve(args);
  fs::create_directories(c.out_dir);
  const std::string header = header_comment(c);
  if (kind == "dt") {
    if (levels.empty()) levels = {32, 64, 128};
    std::vector<std::vector<double>> rows;
    for (const auto& pt : consistency_sweep(levels)) {
      rows.push_back({static_cast<double>(pt.n_time), pt.dt, pt.max_residual, pt.order});
      std::cout << "N_time " << pt.n_time << " max|r| " << pt.max_residual << " order " << pt.order << '\n';
    }
    write_table(out_path(c, "sweep_dt.csv"), header, {"n_time", "dt", "max_residual", "order"}, rows);
    return 0;
  }
  if (kind != "ntest") throw ConfigError("sweep kind must be 'dt' or 'ntest'");
  if (levels.empty()) levels = {5, 10, 20, 40};
  const ProblemSpec p = build_problem(c);
  std::vector<MLPState> pool;
  if (!checkpoint.empty()) {
    pool.push_back(read_checkpoint(checkpoint));
  } else {
    for (int s = 0; s < states; ++s) {
      pool.push_back(init_mlp(c.seed + static_cast<std::uint64_t>(s), standard_widths(p.n_time, c.hidden_layers, c.hidden_width)));
    }
  }
  std::vector<std::vector<double>> rows;
  int violations = 0;
  for (std::size_t s = 0; s < pool.size(); ++s) {
    const Eigen::MatrixXd m = truncation_sweep(p, pool[s], make_bc(p), levels, c.lagged_coefficients);
    violations += truncation_violations(m);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index n = 0; n < m.cols(); ++n) {
        rows.push_back({static_cast<double>(s), static_cast<double>(levels[static_cast<std::size_t>(i)]),
                        static_cast<double>(n + 1), m(i, n)});
      }
    }
  }
  write_table(out_path(c, "sweep_ntest.csv"), header, {"state", "n_test", "n", "dual_norm"}, rows);
  std::cout << "truncation monotonicity violations: " << violations << '\n';
  return violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-discrete variational PINN solver"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs train_args, validate_args, oracle_args, sweep_args;
  auto* train_cmd = app.add_subcommand("train", "train a network and write history, checkpoints and snapshots");
  add_common(train_cmd, train_args);

  std::string checkpoint, history;
  auto* validate_cmd = app.add_subcommand("validate", "check a checkpoint against the oracle and the error bounds");
  add_common(validate_cmd, validate_args);
  validate_cmd->add_option("--checkpoint", checkpoint, "checkpoint file (default <out-dir>/checkpoint.txt)");
  validate_cmd->add_option("--history", history, "loss history (default <out-dir>/history.csv)");

  int stride = 1;
  auto* oracle_cmd = app.add_subcommand("oracle", "run the finite-difference reference solver");
  add_common(oracle_cmd, oracle_args);
  oracle_cmd->add_option("--stride", stride, "write every stride-th node and step")->check(CLI::PositiveNumber);

  std::string kind = "dt", sweep_checkpoint;
  std::vector<int> levels;
  int states = 5;
  auto* sweep_cmd = app.add_subcommand("sweep", "time-step consistency or test-space truncation sweep");
  add_common(sweep_cmd, sweep_args);
  sweep_cmd->add_option("--kind", kind, "dt or ntest")->check(CLI::IsMember({"dt", "ntest"}));
  sweep_cmd->add_option("--levels", levels, "N_time values (dt) or N_test values (ntest)");
  sweep_cmd->add_option("--checkpoint", sweep_checkpoint, "network state for the ntest sweep");
  sweep_cmd->add_option("--states", states, "random states when no checkpoint is given")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (train_cmd->parsed()) return cmd_train(train_args);
    if (validate_cmd->parsed()) return cmd_validate(validate_args, checkpoint, history);
    if (oracle_cmd->parsed()) return cmd_oracle(oracle_args, stride);
    return cmd_sweep(sweep_args, kind, levels, sweep_checkpoint, states);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
