#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ptsync/errors.hpp"
#include "ptsync/integrator.hpp"
#include "ptsync/regulator.hpp"

namespace ptsync {

enum class ScalarKind {
  lemma2,  // V' = -delta V / C
  power,   // V' = -delta V^p / C
  lemma3,  // V' = delta1 V^p - delta2 V / C
};

constexpr std::string_view to_string(ScalarKind k) noexcept {
  switch (k) {
    case ScalarKind::lemma2: return "lemma2";
    case ScalarKind::power: return "power";
    case ScalarKind::lemma3: return "lemma3";
  }
  return "lemma2";
}

/// A scalar prescribed-time model. Build through the named factories, which
/// validate the parameters; fields are read-only afterwards by convention.
struct ScalarModel {
  ScalarKind kind = ScalarKind::lemma2;
  double delta = 1.0;
  double delta1 = 0.0;
  double delta2 = 1.0;
  double p = 1.0;
  Regulator regulator = Regulator::power(1.0, 1.0);
  double v0 = 0.0;

  static ScalarModel lemma2(const Regulator& r, double delta, double v0) {
    ScalarModel m;
    m.kind = ScalarKind::lemma2;
    m.delta = delta;
    m.regulator = r;
    m.v0 = v0;
    m.validate();
    return m;
  }

  static ScalarModel power_law(const Regulator& r, double delta, double p, double v0) {
    ScalarModel m;
    m.kind = ScalarKind::power;
    m.delta = delta;
    m.p = p;
    m.regulator = r;
    m.v0 = v0;
    m.validate();
    return m;
  }

  static ScalarModel lemma3(const Regulator& r, double delta1, double delta2, double p,
                            double v0) {
    ScalarModel m;
    m.kind = ScalarKind::lemma3;
    m.delta1 = delta1;
    m.delta2 = delta2;
    m.p = p;
    m.regulator = r;
    m.v0 = v0;
    m.validate();
    return m;
  }

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidParameters, what); };
    if (!(v0 >= 0.0) || !std::isfinite(v0)) bad("V0 must be finite and nonnegative");
    if (!(p > 0.0) || !std::isfinite(p)) bad("p must be positive");
    switch (kind) {
      case ScalarKind::lemma2:
        if (p != 1.0) bad("lemma2 model has p = 1");
        [[fallthrough]];
      case ScalarKind::power:
        if (!(delta > 0.0) || !std::isfinite(delta)) bad("delta must be positive");
        break;
      case ScalarKind::lemma3:
        if (!(delta1 >= 0.0) || !std::isfinite(delta1)) bad("delta1 must be nonnegative");
        if (!(delta2 > 0.0) || !std::isfinite(delta2)) bad("delta2 must be positive");
        if (p == 1.0 && !(delta2 > delta1 * regulator.at_start())) {
          bad("p = 1 requires delta2 > delta1 * C(0)");
        }
        break;
    }
  }

  /// Coefficient multiplying V / C(t) in the decay term.
  double linear_rate() const { return kind == ScalarKind::lemma3 ? delta2 : delta; }

  double rhs(double t, double v) const {
    v = std::max(v, 0.0);
    const double inv_c = regulator.reciprocal(t);
    switch (kind) {
      case ScalarKind::lemma2: return -delta * v * inv_c;
      case ScalarKind::power: return -delta * std::pow(v, p) * inv_c;
      case ScalarKind::lemma3: return delta1 * std::pow(v, p) - delta2 * v * inv_c;
    }
    return 0.0;
  }

  bool operator==(const ScalarModel&) const = default;
};

enum class PhiValue { Infinite, NonzeroConstant, Zero };

constexpr std::string_view to_string(PhiValue v) noexcept {
  switch (v) {
    case PhiValue::Infinite: return "Infinite";
    case PhiValue::NonzeroConstant: return "NonzeroConstant";
    case PhiValue::Zero: return "Zero";
  }
  return "Zero";
}

/// Limit of V(s)/C(s) as s -> T, which decides V'(T).
struct PhiClass {
  PhiValue value = PhiValue::Zero;
  double constant = 0.0;  // only meaningful for NonzeroConstant
};

namespace detail {

inline double gk_integrate(auto&& f, double a, double b) {
  if (b <= a) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-10,
                                                                        &error);
}

}  // namespace detail

/// Exact V at each of the (nondecreasing) times, all in [0, T).
///
/// lemma2 / p = 1: V0 exp(-delta I(s)) with I the integral of 1/C.
/// power, p != 1:  V^{1-p} = V0^{1-p} + (p - 1) delta I(s), clamped at zero.
/// lemma3:         the variation-of-constants solution for V^{1-p}, with the
///                 nested integral accumulated interval by interval so each
///                 sample reuses the bracket of the previous one.
///
/// V0 = 0 yields the zero solution for every kind.
inline Vector closed_form_series(const ScalarModel& m, std::span<const double> times) {
  m.validate();
  const Regulator& reg = m.regulator;
  for (std::size_t k = 0; k < times.size(); ++k) {
    check_time(reg, times[k]);
    if (k > 0 && times[k] < times[k - 1]) {
      throw Error(ErrorCode::InvalidParameters, "closed_form times must be nondecreasing");
    }
  }
  Vector out(times.size(), 0.0);
  if (m.v0 == 0.0 || times.empty()) return out;

  const double p = m.p;
  double prev = 0.0;
  double integral = 0.0;  // I(prev)

  if (m.kind != ScalarKind::lemma3 || p == 1.0) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      integral += integral_between(reg, prev, times[k]);
      prev = times[k];
      const double s = times[k];
      if (m.kind == ScalarKind::lemma3) {
        out[k] = m.v0 * std::exp(m.delta1 * s - m.delta2 * integral);
      } else if (p == 1.0) {
        out[k] = m.v0 * std::exp(-m.delta * integral);
      } else if (p > 1.0) {
        out[k] = std::pow(std::pow(m.v0, 1.0 - p) + (p - 1.0) * m.delta * integral,
                          -1.0 / (p - 1.0));
      } else {
        const double base = std::pow(m.v0, 1.0 - p) - (1.0 - p) * m.delta * integral;
        out[k] = base > 0.0 ? std::pow(base, 1.0 / (1.0 - p)) : 0.0;
      }
    }
    return out;
  }

  if (p < 1.0) {
    // U = V^{1-p} satisfies U' = (1-p) delta1 - (1-p) delta2 U / C.
    const double c = (1.0 - p) * m.delta2;
    double u = std::pow(m.v0, 1.0 - p);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double s = times[k];
      const double step_integral = integral_between(reg, prev, s);
      const double forcing = detail::gk_integrate(
          [&](double t) { return std::exp(-c * integral_between(reg, t, s)); }, prev, s);
      u = u * std::exp(-c * step_integral) + (1.0 - p) * m.delta1 * forcing;
      prev = s;
      out[k] = std::pow(u, 1.0 / (1.0 - p));
    }
    return out;
  }

  // p > 1: V = exp(-delta2 I(s)) B(s)^{-1/(p-1)},
  // B(s) = V0^{1-p} - (p-1) delta1 int_0^s exp(-(p-1) delta2 I(t)) dt.
  const double c = (p - 1.0) * m.delta2;
  double bracket = std::pow(m.v0, 1.0 - p);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double s = times[k];
    const double base = integral;
    const double start = prev;
    const double forcing = detail::gk_integrate(
        [&](double t) { return std::exp(-c * (base + integral_between(reg, start, t))); }, start,
        s);
    bracket -= (p - 1.0) * m.delta1 * forcing;
    integral += integral_between(reg, prev, s);
    prev = s;
    if (!(bracket > 0.0)) {
      throw Error(ErrorCode::Blowup, "solution escapes to infinity before t = " + std::to_string(s));
    }
    out[k] = std::exp(-m.delta2 * integral) * std::pow(bracket, -1.0 / (p - 1.0));
  }
  return out;
}

inline double closed_form(const ScalarModel& m, double s) {
  const double t[1] = {s};
  return closed_form_series(m, t)[0];
}

struct ScalarTrajectory {
  Vector times;
  Vector values;
};

namespace detail {

struct ScalarSystem {
  const ScalarModel& model;

  void rhs(double t, std::span<const double> x, std::span<double> dx) const {
    dx[0] = model.rhs(t, x[0]);
  }

  double stiffness(double t, std::span<const double> x) const {
    const double v = std::max(x[0], 0.0);
    const double inv_c = model.regulator.reciprocal(t);
    switch (model.kind) {
      case ScalarKind::lemma2: return model.delta * inv_c;
      case ScalarKind::power:
        // For p < 1 the Jacobian is unbounded at V = 0; the clamp handles that end.
        return model.p >= 1.0 ? model.delta * model.p * std::pow(v, model.p - 1.0) * inv_c : 0.0;
      case ScalarKind::lemma3: {
        double rho = model.delta2 * inv_c;
        if (v > 0.0) rho += model.delta1 * model.p * std::pow(v, model.p - 1.0);
        return rho;
      }
    }
    return 0.0;
  }

  // Zero is an equilibrium of every scalar model; once reached it is kept.
  bool at_rest(std::span<const double> x) const { return x[0] == 0.0; }

  // Subnormal values carry no relative precision and would keep the step law
  // shrinking without ever reaching the equilibrium.
  void project(std::span<double> x) const {
    if (!(x[0] >= std::numeric_limits<double>::min())) x[0] = 0.0;
  }
};

}  // namespace detail

/// Numeric solution on [0, T - stop_gap] with the shared RK4 step law,
/// sampled on the geometric grid (plus any extra instants).
inline ScalarTrajectory simulate_scalar(const ScalarModel& m, const IntegratorConfig& cfg,
                                        std::span<const double> extra_times = {}) {
  m.validate();
  const double horizon = m.regulator.horizon();
  const Vector times = sample_times(horizon, cfg, extra_times);
  ScalarTrajectory traj{times, Vector(times.size(), 0.0)};
  detail::ScalarSystem sys{m};
  double state[1] = {m.v0};
  const IntegrationOutcome outcome = integrate_samples(
      sys, std::span<double>(state), times, horizon, cfg,
      [&](std::size_t k, double, std::span<const double> x) { traj.values[k] = x[0]; });
  if (!outcome.ok) throw Error(outcome.code, outcome.message);
  return traj;
}

inline ScalarTrajectory simulate_scalar(const ScalarModel& m, double stop_gap,
                                        std::size_t samples) {
  IntegratorConfig cfg = IntegratorConfig::scalar_defaults(m.regulator.horizon());
  cfg.stop_gap = stop_gap;
  cfg.samples = samples;
  return simulate_scalar(m, cfg);
}

/// Analytic classification of lim V(s)/C(s) for power regulators.
inline PhiClass classify_phi(const ScalarModel& m) {
  m.validate();
  if (m.kind == ScalarKind::power) {
    throw Error(ErrorCode::InvalidParameters, "classify_phi covers the lemma2 and lemma3 models");
  }
  const Regulator& reg = m.regulator;
  if (reg.kind() != RegulatorKind::power) {
    throw Error(ErrorCode::UnsupportedRegulator,
                "derivative class is only derived for power regulators");
  }
  if (m.v0 == 0.0) return {PhiValue::Zero, 0.0};
  const double ell = reg.ell();
  const double horizon = reg.horizon();
  // Convergent integral: V(T) > 0 while C(T) = 0.
  if (ell < 1.0) return {PhiValue::Infinite, 0.0};

  double rate = m.delta;
  double scale = m.v0;  // lim V(s) T^rate / (T - s)^rate for ell = 1
  if (m.kind == ScalarKind::lemma3) {
    // With p < 1 the source term pins V^{1-p} to delta1 C / delta2, so V/C -> 0.
    if (m.p < 1.0 && m.delta1 > 0.0) return {PhiValue::Zero, 0.0};
    rate = m.delta2;
    if (m.p == 1.0) {
      scale = m.v0 * std::exp(m.delta1 * horizon);
    } else if (m.p > 1.0 && ell == 1.0 && rate == 1.0) {
      const double bracket =
          std::pow(m.v0, 1.0 - m.p) - (m.p - 1.0) * m.delta1 * horizon / m.p;
      if (!(bracket > 0.0)) throw Error(ErrorCode::Blowup, "solution escapes before T");
      scale = std::pow(bracket, -1.0 / (m.p - 1.0));
    }
  }
  if (ell > 1.0) return {PhiValue::Zero, 0.0};
  if (rate < 1.0) return {PhiValue::Infinite, 0.0};
  if (rate > 1.0) return {PhiValue::Zero, 0.0};
  return {PhiValue::NonzeroConstant, scale / horizon};
}

}  // namespace ptsync
