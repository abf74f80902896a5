#pragma once

#include <Eigen/Dense>
#include <functional>

namespace morse::ode {

using State = Eigen::VectorXd;

struct Options {
  double rtol = 1e-9;
  double atol = 1e-11;
  double initial_step = 1e-3;
  double min_step = 1e-14;
  double max_step = 1.0;
  long max_steps = 2'000'000;
};

/// dy/dt = rhs(t, y)
using Rhs = std::function<void(double t, const State& y, State& dydt)>;

/// Called after every accepted step. May modify y in place (projection onto a
/// constraint set). Returning true stops the integration.
using StepHook = std::function<bool(double t, State& y)>;

struct Result {
  double t = 0.0;
  State y;
  long steps = 0;
  long rejected = 0;
  bool stopped_by_hook = false;
};

/// Adaptive Dormand-Prince 5(4) with FSAL and a standard PI-free controller.
/// Integrates from t0 toward t_end (t_end > t0). Throws ConvergenceError on
/// step-size underflow or when max_steps is exhausted.
Result dormand_prince(const Rhs& rhs, double t0, const State& y0, double t_end, const Options& options,
                      const StepHook& hook = {});

}  // namespace morse::ode
