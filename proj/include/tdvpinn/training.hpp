#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tdvpinn/errors.hpp"
#include "tdvpinn/network.hpp"
#include "tdvpinn/optimizer.hpp"
#include "tdvpinn/problems.hpp"
#include "tdvpinn/random.hpp"
#include "tdvpinn/testspace.hpp"
#include "tdvpinn/weakform.hpp"

namespace tdvpinn {

struct TrainOptions {
  std::uint64_t init_seed = 0;
  std::uint64_t quadrature_seed = 1;
  std::vector<int> widths;          // empty: 5 x 32 hidden, N_time outputs
  long iterations = 1000;
  Schedule schedule;
  bool fixed_quadrature = false;
  bool lagged_coefficients = false;
  long checkpoint_every = 0;        // 0: no intermediate checkpoints
};

struct HistoryRow {
  long iteration;
  double lr;
  double loss;
};

struct TrainResult {
  MLPState state;
  std::vector<HistoryRow> history;
  std::vector<double> seconds;      // wall time per iteration; kept apart from the history
  ResidualMatrix last_residuals;
};

/// Called with the number of completed iterations after every `checkpoint_every`
/// iterations and once more for the final state (unless that was just reported).
using CheckpointFn = std::function<void(long, const MLPState&)>;

/// Called after every iteration with the evaluation that produced the update.
using IterationFn = std::function<void(long, const LossEval&)>;

inline TrainResult train(const ProblemSpec& problem, const TrainOptions& opt, const CheckpointFn& on_checkpoint = {},
                         const IterationFn& on_iteration = {}) {
  problem.validate();
  opt.schedule.validate();
  if (opt.iterations < 0) throw ConfigError("iteration count must be non-negative");
  const std::vector<int> widths = opt.widths.empty() ? standard_widths(problem.n_time) : opt.widths;
  if (widths.back() != problem.n_time) throw ConfigError("network output width must equal N_time");

  TrainResult out;
  out.state = init_mlp(opt.init_seed, widths);
  Eigen::VectorXd theta = flatten(out.state);
  AdamState adam(theta.size(), opt.schedule);
  const BCEnforcer bc = make_bc(problem);
  const Basis basis = basis_for(problem, problem.n_test);
  Rng rng(opt.quadrature_seed);

  WeakFormContext ctx;
  bool have_ctx = false;
  for (long it = 0; it < opt.iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    if (!have_ctx || !opt.fixed_quadrature) {
      ctx = make_context(problem, basis, sample_quadrature(problem.a, problem.b, static_cast<std::size_t>(problem.n_int), rng),
                         opt.lagged_coefficients);
      have_ctx = true;
    }
    LossEval ev = loss_and_gradient(ctx, out.state, bc);
    if (!std::isfinite(ev.loss)) throw DivergenceError("non-finite loss at iteration " + std::to_string(it), it);
    const double lr = adam_step(adam, theta, ev.grad);
    unflatten(theta, out.state);
    out.history.push_back({it, lr, ev.loss});
    out.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (on_iteration) on_iteration(it, ev);
    out.last_residuals = std::move(ev.residuals);
    const long done = it + 1;
    if (on_checkpoint && opt.checkpoint_every > 0 && done % opt.checkpoint_every == 0 && done < opt.iterations) {
      on_checkpoint(done, out.state);
    }
  }
  if (on_checkpoint) on_checkpoint(opt.iterations, out.state);
  return out;
}

}  // namespace tdvpinn
