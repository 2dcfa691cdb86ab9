#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptsync/dynamics.hpp"
#include "ptsync/errors.hpp"
#include "ptsync/integrator.hpp"
#include "ptsync/linalg.hpp"
#include "ptsync/network.hpp"

namespace ptsync {

/// Sum of ||x_i - x_1|| over nodes i >= 2. X is node-major, N x n.
inline double error_e1(std::span<const double> x, std::size_t nodes, std::size_t dims) {
  if (x.size() != nodes * dims) throw Error(ErrorCode::DimensionMismatch, "state is not N x n");
  double total = 0.0;
  for (std::size_t i = 1; i < nodes; ++i) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = x[i * dims + d] - x[d];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total;
}

/// Sum of ||x_i - x0|| over all nodes.
inline double error_e2(std::span<const double> x, std::span<const double> x0, std::size_t nodes,
                       std::size_t dims) {
  if (x.size() != nodes * dims || x0.size() != dims) {
    throw Error(ErrorCode::DimensionMismatch, "state is not N x n or target is not length n");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < nodes; ++i) {
    double sq = 0.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const double diff = x[i * dims + d] - x0[d];
      sq += diff * diff;
    }
    total += std::sqrt(sq);
  }
  return total;
}

/// Per-dimension psi-weighted mean x*_d = sum_i psi_i^[d] x_i^d.
inline Vector dummy_target(std::span<const double> x, const std::vector<Vector>& psi,
                           std::size_t nodes, std::size_t dims) {
  Vector out(dims, 0.0);
  for (std::size_t d = 0; d < dims; ++d)
    for (std::size_t i = 0; i < nodes; ++i) out[d] += psi[d][i] * x[i * dims + d];
  return out;
}

/// W = 1/2 sum_d sum_i psi_i^[d] (x_i^d - x*_d)^2. The deviation is formed as
/// sum_j psi_j (x_i - x_j), so identical states give exactly zero.
inline double lyapunov_sync(std::span<const double> x, const std::vector<Vector>& psi,
                            std::size_t nodes, std::size_t dims) {
  double total = 0.0;
  for (std::size_t d = 0; d < dims; ++d) {
    for (std::size_t i = 0; i < nodes; ++i) {
      double dev = 0.0;
      for (std::size_t j = 0; j < nodes; ++j) dev += psi[d][j] * (x[i * dims + d] - x[j * dims + d]);
      total += psi[d][i] * dev * dev;
    }
  }
  return 0.5 * total;
}

/// W = 1/2 sum_d sum_i psi_i^[d] (x_i^d - x0^d)^2.
inline double lyapunov_pinned(std::span<const double> x, std::span<const double> x0,
                              const std::vector<Vector>& psi, std::size_t nodes,
                              std::size_t dims) {
  double total = 0.0;
  for (std::size_t d = 0; d < dims; ++d)
    for (std::size_t i = 0; i < nodes; ++i) {
      const double dev = x[i * dims + d] - x0[d];
      total += psi[d][i] * dev * dev;
    }
  return 0.5 * total;
}

/// Right-hand side of the coupled network, optionally with the pinned
/// target appended to the state.
///
/// The coupling is evaluated as sum_j M^[de]_ij (x_j^e - x_i^e), which equals
/// sum_j M^[de]_ij x_j^e because every outer matrix has zero row sums.
class NetworkSystem {
 public:
  NetworkSystem(const MultiWeightNetwork& net, NodeDynamics dyn)
      : sums_(build_sum_matrices(net, false)),
        dyn_(std::move(dyn)),
        regulator_(net.regulator()),
        eta_(net.eta()),
        nodes_(net.nodes()),
        dims_(net.dims()),
        pinned_(net.pinned()),
        fx_(net.dims()) {
    if (dyn_.dims() != dims_) {
      throw Error(ErrorCode::DimensionMismatch, "dynamics dimension differs from the inner matrices");
    }
    if (pinned_) gain_ = net.pinning()->gain;
    const DenseMatrix op = build_sum_matrices(net, pinned_).stacked();
    coupling_norm_ = 0.0;
    for (std::size_t r = 0; r < op.rows(); ++r) {
      double row = 0.0;
      for (std::size_t c = 0; c < op.cols(); ++c) row += std::abs(op(r, c));
      coupling_norm_ = std::max(coupling_norm_, row);
    }
    // The target column carries +Gamma for node 1.
    if (pinned_) coupling_norm_ += gain_.inf_norm();
    lipschitz_ = dyn_.lipschitz_bound();
  }

  std::size_t nodes() const noexcept { return nodes_; }
  std::size_t dims() const noexcept { return dims_; }
  bool pinned() const noexcept { return pinned_; }
  std::size_t state_size() const noexcept { return nodes_ * dims_ + (pinned_ ? dims_ : 0); }

  void rhs(double t, std::span<const double> x, std::span<double> dx) {
    const double gain = eta_ * regulator_.reciprocal(t);
    for (std::size_t i = 0; i < nodes_; ++i) {
      dyn_.eval(x.subspan(i * dims_, dims_), fx_);
      for (std::size_t d = 0; d < dims_; ++d) {
        double coupling = 0.0;
        for (std::size_t e = 0; e < dims_; ++e) {
          const DenseMatrix& m = sums_.block(d, e);
          const double xie = x[i * dims_ + e];
          for (std::size_t j = 0; j < nodes_; ++j) {
            if (j == i) continue;
            const double w = m(i, j);
            if (w != 0.0) coupling += w * (x[j * dims_ + e] - xie);
          }
        }
        dx[i * dims_ + d] = fx_[d] + gain * coupling;
      }
    }
    if (pinned_) {
      const std::size_t off = nodes_ * dims_;
      for (std::size_t d = 0; d < dims_; ++d) {
        double pin = 0.0;
        for (std::size_t e = 0; e < dims_; ++e) pin += gain_(d, e) * (x[e] - x[off + e]);
        dx[d] -= gain * pin;
      }
      dyn_.eval(x.subspan(off, dims_), fx_);
      for (std::size_t d = 0; d < dims_; ++d) dx[off + d] = fx_[d];
    }
  }

  /// Infinity-norm bound on the Jacobian at time t.
  double stiffness(double t, std::span<const double>) const {
    return eta_ * regulator_.reciprocal(t) * coupling_norm_ + lipschitz_;
  }

 private:
  SumMatrixSet sums_;
  NodeDynamics dyn_;
  Regulator regulator_;
  double eta_;
  std::size_t nodes_;
  std::size_t dims_;
  bool pinned_;
  DenseMatrix gain_{1, 1};
  double coupling_norm_ = 0.0;
  double lipschitz_ = 0.0;
  Vector fx_;
};

/// Derivative of every node (and of the target when pinned) at time t.
inline Vector eval_rhs(const MultiWeightNetwork& net, const NodeDynamics& dyn, double t,
                       std::span<const double> x, std::span<const double> x0 = {}) {
  check_time(net.regulator(), t);
  if (x.size() != net.nodes() * net.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "state is not N x n");
  }
  if (net.pinned() && x0.size() != net.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "pinned network needs a target state");
  }
  Vector full(x.begin(), x.end());
  if (net.pinned()) full.insert(full.end(), x0.begin(), x0.end());
  for (double v : full)
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteState, "state is not finite");
  NetworkSystem sys(net, dyn);
  Vector dx(full.size());
  sys.rhs(t, full, dx);
  return dx;
}

struct Trajectory {
  std::size_t nodes = 0;
  std::size_t dims = 0;
  bool pinned = false;
  Vector times;
  std::vector<Vector> states;   // node-major N x n per sample
  std::vector<Vector> targets;  // x0 per sample, pinned runs only
  Vector lyapunov;
  Vector error;  // E1 without pinning, E2 with pinning
  std::vector<Vector> weights;  // psi^[d] used for W
  bool uniform_weights = false;  // psi unavailable, W uses 1/N
  std::size_t steps = 0;

  std::size_t size() const noexcept { return times.size(); }

  /// Index of the sample at time t, if recorded.
  std::optional<std::size_t> index_of(double t) const {
    const auto it = std::lower_bound(times.begin(), times.end(), t);
    if (it == times.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - times.begin());
  }
};

/// Thrown when integration stops early; carries the samples recorded so far.
class IntegrationFailure : public Error {
 public:
  IntegrationFailure(ErrorCode code, const std::string& message, Trajectory partial)
      : Error(code, message), partial_(std::move(partial)) {}

  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

inline std::vector<Vector> lyapunov_weights(const MultiWeightNetwork& net, bool& uniform) {
  uniform = false;
  try {
    return compute_nlevecs(build_sum_matrices(net, false));
  } catch (const Error&) {
    uniform = true;
    return std::vector<Vector>(net.dims(),
                               Vector(net.nodes(), 1.0 / static_cast<double>(net.nodes())));
  }
}

/// Integrates the network from X0 (node-major N x n) to T - stop_gap.
inline Trajectory integrate(const MultiWeightNetwork& net, const NodeDynamics& dyn,
                            std::span<const double> x0, const IntegratorConfig& cfg,
                            std::span<const double> extra_times = {}) {
  const std::size_t nodes = net.nodes();
  const std::size_t dims = net.dims();
  if (x0.size() != nodes * dims) {
    throw Error(ErrorCode::DimensionMismatch, "initial states must be N x n");
  }
  for (double v : x0)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameters, "initial state is not finite");

  const double horizon = net.regulator().horizon();
  const Vector times = sample_times(horizon, cfg, extra_times);
  NetworkSystem sys(net, dyn);

  Trajectory traj;
  traj.nodes = nodes;
  traj.dims = dims;
  traj.pinned = net.pinned();
  traj.weights = lyapunov_weights(net, traj.uniform_weights);
  traj.times.reserve(times.size());

  Vector state(x0.begin(), x0.end());
  if (net.pinned()) {
    const Vector& target = net.pinning()->target_initial;
    state.insert(state.end(), target.begin(), target.end());
  }

  const std::size_t block = nodes * dims;
  auto observe = [&](std::size_t, double t, std::span<const double> x) {
    const auto nodes_x = x.first(block);
    traj.times.push_back(t);
    traj.states.emplace_back(nodes_x.begin(), nodes_x.end());
    if (traj.pinned) {
      const auto target = x.subspan(block, dims);
      traj.targets.emplace_back(target.begin(), target.end());
      traj.lyapunov.push_back(lyapunov_pinned(nodes_x, target, traj.weights, nodes, dims));
      traj.error.push_back(error_e2(nodes_x, target, nodes, dims));
    } else {
      traj.lyapunov.push_back(lyapunov_sync(nodes_x, traj.weights, nodes, dims));
      traj.error.push_back(error_e1(nodes_x, nodes, dims));
    }
  };

  const IntegrationOutcome outcome =
      integrate_samples(sys, std::span<double>(state), times, horizon, cfg, observe);
  traj.steps = outcome.steps;
  if (!outcome.ok) throw IntegrationFailure(outcome.code, outcome.message, std::move(traj));
  return traj;
}

/// True when W strictly decreases between consecutive samples, allowing
/// runs of exact zeros once synchronized.
inline bool monotone_decreasing(std::span<const double> w) {
  for (std::size_t k = 1; k < w.size(); ++k) {
    if (w[k] == 0.0 && w[k - 1] == 0.0) continue;
    if (!(w[k] < w[k - 1])) return false;
  }
  return true;
}

struct RunSummary {
  double error_start = 0.0;
  double error_end = 0.0;
  double ratio = 0.0;
  bool monotone_w = false;
  double end_time = 0.0;
  std::size_t samples = 0;
  std::size_t steps = 0;
  bool uniform_weights = false;
};

/// Endpoints, error ratio (0 when both ends are below 1e-9) and W monotonicity.
inline RunSummary summarize(const Trajectory& traj) {
  RunSummary s;
  if (traj.size() == 0) return s;
  s.error_start = traj.error.front();
  s.error_end = traj.error.back();
  if (s.error_start < 1e-9 && s.error_end < 1e-9) {
    s.ratio = 0.0;
  } else {
    s.ratio = s.error_end / s.error_start;
  }
  s.monotone_w = monotone_decreasing(traj.lyapunov);
  s.end_time = traj.times.back();
  s.samples = traj.size();
  s.steps = traj.steps;
  s.uniform_weights = traj.uniform_weights;
  return s;
}

}  // namespace ptsync
