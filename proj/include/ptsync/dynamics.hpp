#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <utility>

#include "ptsync/errors.hpp"
#include "ptsync/linalg.hpp"

namespace ptsync {

enum class DynamicsKind { chua3, pwl_affine };

constexpr std::string_view to_string(DynamicsKind k) noexcept {
  return k == DynamicsKind::chua3 ? "chua3" : "pwl_affine";
}

/// Saturation h(u) = (|u + 1| - |u - 1|) / 2.
inline double saturation(double u) noexcept { return 0.5 * (std::abs(u + 1.0) - std::abs(u - 1.0)); }

/// Node dynamics f(x) = D x + A h(x) with h applied component-wise, plus the
/// declared one-sided Lipschitz constant Hf.
class NodeDynamics {
 public:
  static NodeDynamics chua3() {
    return NodeDynamics(DynamicsKind::chua3, -1.0 * DenseMatrix::identity(3),
                        DenseMatrix::from_rows({{-1.25, -3.2, -3.2},
                                                {-3.2, 1.1, -4.4},
                                                {-3.2, 4.4, 1.0}}),
                        5.4704);
  }

  static NodeDynamics pwl_affine(DenseMatrix d, DenseMatrix a, double hf) {
    return NodeDynamics(DynamicsKind::pwl_affine, std::move(d), std::move(a), hf);
  }

  DynamicsKind kind() const noexcept { return kind_; }
  const DenseMatrix& linear() const noexcept { return d_; }
  const DenseMatrix& nonlinear() const noexcept { return a_; }
  double hf() const noexcept { return hf_; }
  std::size_t dims() const noexcept { return d_.rows(); }

  /// out = f(x); out must not alias x.
  void eval(std::span<const double> x, std::span<double> out) const {
    const std::size_t n = dims();
    if (x.size() != n || out.size() != n) {
      throw Error(ErrorCode::DimensionMismatch, "state length does not match dynamics");
    }
    double hx[16];
    Vector heap;
    double* h = hx;
    if (n > 16) {
      heap.resize(n);
      h = heap.data();
    }
    for (std::size_t j = 0; j < n; ++j) h[j] = saturation(x[j]);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += d_(i, j) * x[j] + a_(i, j) * h[j];
      out[i] = acc;
    }
  }

  Vector operator()(std::span<const double> x) const {
    Vector out(dims());
    eval(x, out);
    return out;
  }

  /// Global Lipschitz bound in the infinity norm (h is 1-Lipschitz).
  double lipschitz_bound() const { return d_.inf_norm() + a_.inf_norm(); }

  bool operator==(const NodeDynamics&) const = default;

 private:
  NodeDynamics(DynamicsKind kind, DenseMatrix d, DenseMatrix a, double hf)
      : kind_(kind), d_(std::move(d)), a_(std::move(a)), hf_(hf) {
    if (!d_.is_square() || a_.rows() != d_.rows() || a_.cols() != d_.cols()) {
      throw Error(ErrorCode::DimensionMismatch, "D and A must be square and the same size");
    }
    if (!(hf_ > 0.0) || !std::isfinite(hf_)) {
      throw Error(ErrorCode::InvalidParameters, "Hf must be positive");
    }
  }

  DynamicsKind kind_;
  DenseMatrix d_;
  DenseMatrix a_;
  double hf_;
};

/// An analytic one-sided Lipschitz constant for f = D x + A h(x).
///
/// The Jacobian is D + A S with S diagonal in [0, 1], so
/// lambda_max(sym(D)) + ||A||_2 bounds the symmetric part everywhere.
inline double analytic_hf(const NodeDynamics& dyn) {
  return symmetric_eigen(symmetric_part(dyn.linear())).max() + spectral_norm(dyn.nonlinear());
}

/// -1 + lambda_max((A + A^T)/2), the symmetrized-matrix estimate for D = -I.
inline double symmetrized_hf(const NodeDynamics& dyn) {
  return -1.0 + symmetric_eigen(symmetric_part(dyn.nonlinear())).max();
}

struct QuadCheck {
  double max_ratio = -std::numeric_limits<double>::infinity();
  double declared = 0.0;
  std::size_t trials = 0;
  bool passed = false;
};

/// Samples pairs (x, y) uniformly in the ball of the given radius and records
/// the largest (x - y)^T (f(x) - f(y)) / |x - y|^2.
inline QuadCheck verify_quad(const NodeDynamics& dyn, std::size_t trials, double radius,
                             std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::InvalidParameters, "need at least one trial");
  if (!(radius > 0.0)) throw Error(ErrorCode::InvalidParameters, "radius must be positive");
  const std::size_t n = dyn.dims();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](Vector& v) {
    double len = 0.0;
    do {
      len = 0.0;
      for (double& c : v) {
        c = gauss(rng);
        len += c * c;
      }
    } while (len == 0.0);
    const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(n));
    const double scale = r / std::sqrt(len);
    for (double& c : v) c *= scale;
  };

  QuadCheck out;
  out.declared = dyn.hf();
  out.trials = trials;
  Vector x(n), y(n), fx(n), fy(n);
  for (std::size_t k = 0; k < trials; ++k) {
    draw(x);
    draw(y);
    dyn.eval(x, fx);
    dyn.eval(y, fy);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = x[i] - y[i];
      num += dx * (fx[i] - fy[i]);
      den += dx * dx;
    }
    if (den == 0.0) continue;
    out.max_ratio = std::max(out.max_ratio, num / den);
  }
  out.passed = out.max_ratio <= dyn.hf() + 1e-6;
  return out;
}

}  // namespace ptsync
