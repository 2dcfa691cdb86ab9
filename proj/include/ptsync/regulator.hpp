#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ptsync/errors.hpp"

namespace ptsync {

enum class RegulatorKind { power, exp_a, exp_b };

constexpr std::string_view to_string(RegulatorKind k) noexcept {
  switch (k) {
    case RegulatorKind::power: return "power";
    case RegulatorKind::exp_a: return "exp_a";
    case RegulatorKind::exp_b: return "exp_b";
  }
  return "power";
}

enum class Divergence { diverges, converges };

/// Time-varying regulator C(t) on [0, T), the denominator of the
/// prescribed-time gain. Three closed forms are supported:
///
///   power:  C(t) = (T - t)^ell
///   exp_a:  1/C(t) = (e^{aT} - 1) / (e^{aT} - e^{at})
///   exp_b:  1/C(t) = a e^{a(T-t)} / (e^{a(T-t)} - 1)
///
/// Everything is evaluated through the remaining time tau = T - t so that
/// values close to the singular end stay accurate.
class Regulator {
 public:
  static Regulator power(double horizon, double ell) {
    check_horizon(horizon);
    if (!(ell > 0.0) || !std::isfinite(ell)) {
      throw Error(ErrorCode::InvalidParameters, "power regulator needs ell > 0");
    }
    return Regulator(RegulatorKind::power, horizon, ell, 0.0);
  }

  static Regulator exp_a(double horizon, double rate) {
    check_horizon(horizon);
    check_rate(rate);
    return Regulator(RegulatorKind::exp_a, horizon, 0.0, rate);
  }

  static Regulator exp_b(double horizon, double rate) {
    check_horizon(horizon);
    check_rate(rate);
    return Regulator(RegulatorKind::exp_b, horizon, 0.0, rate);
  }

  RegulatorKind kind() const noexcept { return kind_; }
  double horizon() const noexcept { return horizon_; }
  double ell() const noexcept { return ell_; }
  double rate() const noexcept { return rate_; }

  /// C(t) for t in [0, T).
  double eval(double t) const { return value_at_gap(gap(t)); }
  double operator()(double t) const { return eval(t); }

  /// 1/C(t) for t in [0, T).
  double reciprocal(double t) const { return reciprocal_at_gap(gap(t)); }

  double at_start() const { return value_at_gap(horizon_); }

  /// C as a function of the remaining time tau = T - t in (0, T].
  double value_at_gap(double tau) const {
    switch (kind_) {
      case RegulatorKind::power: return std::pow(tau, ell_);
      case RegulatorKind::exp_a: return std::expm1(-rate_ * tau) / std::expm1(-rate_ * horizon_);
      case RegulatorKind::exp_b: return -std::expm1(-rate_ * tau) / rate_;
    }
    return 0.0;
  }

  double reciprocal_at_gap(double tau) const {
    switch (kind_) {
      case RegulatorKind::power: return std::pow(tau, -ell_);
      case RegulatorKind::exp_a: return std::expm1(-rate_ * horizon_) / std::expm1(-rate_ * tau);
      case RegulatorKind::exp_b: return rate_ / -std::expm1(-rate_ * tau);
    }
    return 0.0;
  }

  /// Whether the regulator can drive a prescribed-time model (the improper
  /// integral of 1/C diverges).
  bool admissible() const noexcept {
    return kind_ != RegulatorKind::power || ell_ >= 1.0;
  }

  Regulator with_ell(double ell) const { return power(horizon_, ell); }

  bool operator==(const Regulator&) const = default;

 private:
  Regulator(RegulatorKind kind, double horizon, double ell, double rate)
      : kind_(kind), horizon_(horizon), ell_(ell), rate_(rate) {}

  static void check_horizon(double horizon) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
      throw Error(ErrorCode::InvalidParameters, "prescribed time T must be positive");
    }
  }
  static void check_rate(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw Error(ErrorCode::InvalidParameters, "exponential regulator needs a > 0");
    }
  }

  double gap(double t) const {
    if (!(t >= 0.0) || !(t < horizon_)) {
      throw Error(ErrorCode::TimeOutOfRange,
                  "t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon_) + ")");
    }
    return horizon_ - t;
  }

  RegulatorKind kind_;
  double horizon_;
  double ell_;
  double rate_;
};

/// Analytic verdict on whether the integral of 1/C over [0, T) diverges.
inline Divergence classify_divergence(const Regulator& r) noexcept {
  if (r.kind() == RegulatorKind::power && r.ell() < 1.0) return Divergence::converges;
  return Divergence::diverges;
}

inline void check_time(const Regulator& r, double t) {
  if (!(t >= 0.0) || !(t < r.horizon())) {
    throw Error(ErrorCode::TimeOutOfRange, "time " + std::to_string(t) + " outside [0, T)");
  }
}

/// Integral of 1/C over [a, b] by adaptive Gauss-Kronrod quadrature.
///
/// The integrand is rewritten in u = -ln(T - t), which turns the algebraic
/// or logarithmic singularity at T into smooth growth.
inline double integral_between(const Regulator& r, double a, double b) {
  check_time(r, a);
  check_time(r, b);
  if (b <= a) return 0.0;
  const double tau_hi = r.horizon() - a;
  const double tau_lo = r.horizon() - b;
  auto integrand = [&](double u) {
    const double tau = std::exp(-u);
    return tau * r.reciprocal_at_gap(tau);
  };
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, -std::log(tau_hi), -std::log(tau_lo), 15, 1e-13, &error);
  return value;
}

/// Integral of 1/C over [0, s] by adaptive quadrature.
inline double numeric_integral_to(const Regulator& r, double s) {
  return integral_between(r, 0.0, s);
}

/// Integral of 1/C over [a, b] from the closed-form antiderivative of each kind.
inline double analytic_integral_between(const Regulator& r, double a, double b) {
  check_time(r, a);
  check_time(r, b);
  if (b <= a) return 0.0;
  const double hi = r.horizon() - a;
  const double lo = r.horizon() - b;
  switch (r.kind()) {
    case RegulatorKind::power: {
      const double ell = r.ell();
      if (ell == 1.0) return std::log(hi / lo);
      return (std::pow(lo, 1.0 - ell) - std::pow(hi, 1.0 - ell)) / (ell - 1.0);
    }
    case RegulatorKind::exp_a: {
      const double k = -std::expm1(-r.rate() * r.horizon()) / r.rate();
      return k * std::log(std::expm1(r.rate() * hi) / std::expm1(r.rate() * lo));
    }
    case RegulatorKind::exp_b:
      return std::log(std::expm1(r.rate() * hi) / std::expm1(r.rate() * lo));
  }
  return 0.0;
}

inline double analytic_integral_to(const Regulator& r, double s) {
  return analytic_integral_between(r, 0.0, s);
}

}  // namespace ptsync
