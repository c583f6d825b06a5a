#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <boost/numeric/odeint/stepper/controlled_runge_kutta.hpp>
#include <boost/numeric/odeint/stepper/controlled_step_result.hpp>
#include <boost/numeric/odeint/stepper/generation.hpp>
#include <boost/numeric/odeint/stepper/runge_kutta_fehlberg78.hpp>

namespace stasim::detail {

struct StepStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Steps per protocol duration never fall below this. The RKF7(8) error
/// estimate nearly vanishes when the right-hand side depends mostly on t, so
/// the controller alone would let a single step span the whole ramp.
inline constexpr double kMinStepsPerDuration = 16.0;

/// Drives an odeint controlled RKF7(8) stepper from 0 to t_end, landing exactly
/// on t_end. Throws Error when the step size collapses or the step budget runs out.
template <class Error, class State, class System, class Observer>
StepStats integrate_to(System&& system, State& x, double t_end, double abs_tol, double rel_tol,
                       Observer&& observe, std::size_t max_steps = 2'000'000) {
  namespace odeint = boost::numeric::odeint;
  using Stepper = odeint::runge_kutta_fehlberg78<State>;
  auto stepper = odeint::make_controlled<Stepper>(abs_tol, rel_tol);

  StepStats stats;
  double t = 0.0;
  const double dt_cap = t_end / kMinStepsPerDuration;
  double dt = dt_cap;
  const double dt_floor = t_end * 1e-14;
  observe(x, t);
  while (t < t_end) {
    if (stats.accepted + stats.rejected >= max_steps) {
      std::ostringstream os;
      os << "step budget exhausted at t=" << t << " of " << t_end;
      throw Error(os.str());
    }
    const bool last = t + dt >= t_end;
    double trial = last ? t_end - t : dt;
    if (stepper.try_step(system, x, t, trial) == odeint::success) {
      ++stats.accepted;
      if (last) t = t_end;
      observe(x, t);
      dt = std::clamp(trial, dt_floor, dt_cap);
      if (last) break;
    } else {
      ++stats.rejected;
      dt = trial;
      if (dt < dt_floor) {
        std::ostringstream os;
        os << "step size underflow (dt=" << dt << ") at t=" << t << " of " << t_end
           << " after " << stats.accepted << " accepted steps";
        throw Error(os.str());
      }
    }
  }
  return stats;
}

struct NoObserver {
  template <class State>
  void operator()(const State&, double) const noexcept {}
};

}  // namespace stasim::detail
