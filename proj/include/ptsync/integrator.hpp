#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ptsync/errors.hpp"
#include "ptsync/linalg.hpp"

namespace ptsync {

/// Step-law and sampling parameters for integrating up to T - stop_gap.
///
/// A step starting at t is
///   h = min(step_cap, shrink_factor * (T - t), stiffness_cap / rho(t, x))
/// where rho bounds the Jacobian of the right-hand side. The third term keeps
/// h * eta / C(t) bounded when C vanishes faster than T - t.
struct IntegratorConfig {
  double stop_gap = 0.0;
  double step_cap = 0.0;
  double shrink_factor = 0.05;
  double stiffness_cap = 2.0;
  std::size_t samples = 200;

  static IntegratorConfig network_defaults(double horizon) {
    return {1e-6 * horizon, 1e-3 * horizon, 0.05, 2.0, 200};
  }

  /// Tighter stiffness cap: scalar runs are compared against closed forms.
  static IntegratorConfig scalar_defaults(double horizon) {
    return {1e-6 * horizon, 1e-3 * horizon, 0.05, 0.025, 200};
  }

  void validate(double horizon) const {
    if (!(stop_gap > 0.0) || !(stop_gap < horizon)) {
      throw Error(ErrorCode::InvalidParameters, "stop_gap must lie in (0, T)");
    }
    if (!(step_cap > 0.0) || !std::isfinite(step_cap)) {
      throw Error(ErrorCode::InvalidParameters, "step_cap must be positive");
    }
    if (!(shrink_factor > 0.0) || !(shrink_factor < 1.0)) {
      throw Error(ErrorCode::InvalidParameters, "shrink_factor must lie in (0, 1)");
    }
    if (!(stiffness_cap > 0.0) || !std::isfinite(stiffness_cap)) {
      throw Error(ErrorCode::InvalidParameters, "stiffness_cap must be positive");
    }
    if (samples < 2) throw Error(ErrorCode::InvalidParameters, "need at least two samples");
  }

  bool operator==(const IntegratorConfig&) const = default;
};

inline constexpr double kBlowupThreshold = 1e12;
inline constexpr double kMinStep = 1e-15;

/// Sample instants in [0, T - stop_gap], geometrically clustered toward T:
/// the remaining time T - t_k shrinks by a constant ratio. Extra instants are
/// merged in.
inline Vector sample_times(double horizon, const IntegratorConfig& cfg,
                           std::span<const double> extra = {}) {
  cfg.validate(horizon);
  const double end = horizon - cfg.stop_gap;
  Vector times(cfg.samples);
  const double ratio = cfg.stop_gap / horizon;
  for (std::size_t k = 0; k < cfg.samples; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(cfg.samples - 1);
    times[k] = horizon - horizon * std::pow(ratio, frac);
  }
  times.front() = 0.0;
  times.back() = end;
  for (double t : extra) {
    if (!(t >= 0.0) || t > end) {
      throw Error(ErrorCode::TimeOutOfRange, "extra sample time outside [0, T - stop_gap]");
    }
    times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

template <class S>
concept OdeSystem = requires(S& sys, double t, std::span<const double> x, std::span<double> dx) {
  sys.rhs(t, x, dx);
  { sys.stiffness(t, x) } -> std::convertible_to<double>;
};

/// Classical fourth-order Runge-Kutta with reusable stage buffers.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim) : tmp_(dim), k1_(dim), k2_(dim), k3_(dim), k4_(dim) {}

  template <OdeSystem S>
  void step(S& sys, double t, double h, std::span<double> x) {
    const std::size_t n = x.size();
    const double h2 = 0.5 * h;
    sys.rhs(t, x, k1_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h2 * k1_[i];
    sys.rhs(t + h2, tmp_, k2_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h2 * k2_[i];
    sys.rhs(t + h2, tmp_, k3_);
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k3_[i];
    sys.rhs(t + h, tmp_, k4_);
    const double h6 = h / 6.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += h6 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  Vector tmp_, k1_, k2_, k3_, k4_;
};

struct IntegrationOutcome {
  bool ok = true;
  ErrorCode code = ErrorCode::Blowup;
  std::string message;
  double time = 0.0;
  std::size_t steps = 0;
};

/// Integrates sys from times.front() through every entry of times, calling
/// observe(k, t, x) at each. Stops at the first numerical failure and reports
/// it in the outcome instead of throwing, so callers can keep the partial
/// record.
///
/// Optional hooks on the system: project(x) after each step (e.g. clamping
/// at zero) and at_rest(x) to detect an equilibrium that persists for all
/// later times.
template <OdeSystem S, class Observer>
IntegrationOutcome integrate_samples(S& sys, std::span<double> x, std::span<const double> times,
                                     double horizon, const IntegratorConfig& cfg,
                                     Observer&& observe) {
  IntegrationOutcome out;
  Rk4Stepper stepper(x.size());
  double t = times.front();
  observe(std::size_t{0}, t, std::span<const double>(x));
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double target = times[k];
    while (t < target) {
      if constexpr (requires { sys.at_rest(std::span<const double>(x)); }) {
        if (sys.at_rest(std::span<const double>(x))) {
          t = target;
          break;
        }
      }
      double h = std::min(cfg.step_cap, cfg.shrink_factor * (horizon - t));
      const double rho = sys.stiffness(t, std::span<const double>(x));
      if (rho > 0.0 && std::isfinite(rho)) h = std::min(h, cfg.stiffness_cap / rho);
      if (!(h >= kMinStep)) {
        out.ok = false;
        out.code = ErrorCode::StepUnderflow;
        out.message = "step " + std::to_string(h) + " below minimum at t = " + std::to_string(t);
        out.time = t;
        return out;
      }
      bool last = false;
      if (t + h >= target || target - (t + h) < 1e-2 * h) {
        h = target - t;
        last = true;
      }
      stepper.step(sys, t, h, x);
      t = last ? target : t + h;
      ++out.steps;
      if constexpr (requires { sys.project(x); }) sys.project(x);
      double peak = 0.0;
      for (double v : x) {
        if (!std::isfinite(v)) {
          out.ok = false;
          out.code = ErrorCode::NonFiniteState;
          out.message = "non-finite state at t = " + std::to_string(t);
          out.time = t;
          return out;
        }
        peak = std::max(peak, std::abs(v));
      }
      if (peak > kBlowupThreshold) {
        out.ok = false;
        out.code = ErrorCode::Blowup;
        out.message = "state magnitude " + std::to_string(peak) + " at t = " + std::to_string(t);
        out.time = t;
        return out;
      }
    }
    observe(k, t, std::span<const double>(x));
  }
  out.time = t;
  return out;
}

}  // namespace ptsync
