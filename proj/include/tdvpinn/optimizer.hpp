#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tdvpinn/errors.hpp"

namespace tdvpinn {

enum class ScheduleKind { constant, exponential, cosine };

inline std::string to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::exponential: return "exponential";
    case ScheduleKind::cosine: return "cosine";
  }
  return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& name) {
  if (name == "constant") return ScheduleKind::constant;
  if (name == "exponential" || name == "exp") return ScheduleKind::exponential;
  if (name == "cosine" || name == "cos") return ScheduleKind::cosine;
  throw ConfigError("unknown schedule '" + name + "' (expected constant, exponential or cosine)");
}

struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double lr0 = 1e-3;
  double rate = 0.9;           // exponential: factor per decay_steps
  double decay_steps = 1000.0;
  double total_steps = 1.0;    // cosine: steps until the rate reaches zero

  void validate() const {
    if (!(lr0 > 0.0)) throw ConfigError("initial learning rate must be positive");
    if (kind == ScheduleKind::exponential && (!(rate > 0.0) || rate > 1.0 || !(decay_steps > 0.0))) {
      throw ConfigError("exponential decay needs 0 < rate <= 1 and decay_steps > 0");
    }
    if (kind == ScheduleKind::cosine && !(total_steps > 0.0)) throw ConfigError("cosine decay needs total_steps > 0");
  }
};

inline double schedule_lr(const Schedule& s, long step) {
  const double t = static_cast<double>(std::max(step, 0L));
  switch (s.kind) {
    case ScheduleKind::constant: return s.lr0;
    case ScheduleKind::exponential: return s.lr0 * std::pow(s.rate, t / s.decay_steps);
    case ScheduleKind::cosine: {
      const double frac = std::min(t / s.total_steps, 1.0);
      return s.lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
    }
  }
  return s.lr0;
}

struct AdamState {
  Eigen::VectorXd m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Schedule schedule;

  explicit AdamState(Eigen::Index n_params = 0, Schedule sched = {})
      : m(Eigen::VectorXd::Zero(n_params)), v(Eigen::VectorXd::Zero(n_params)), schedule(sched) {}
};

/// One bias-corrected Adam update in place. Returns the learning rate used.
inline double adam_step(AdamState& s, Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  if (params.size() != grads.size() || params.size() != s.m.size()) {
    throw StructuralError("adam_step: parameter, gradient and moment lengths differ");
  }
  if (!grads.allFinite()) throw DivergenceError("non-finite gradient", s.step);
  const double lr = schedule_lr(s.schedule, s.step);
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grads;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
  return lr;
}

}  // namespace tdvpinn
