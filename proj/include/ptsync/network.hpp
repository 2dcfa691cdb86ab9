#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptsync/errors.hpp"
#include "ptsync/linalg.hpp"
#include "ptsync/regulator.hpp"

namespace ptsync {

/// Feedback on node 1 toward an isolated target x0 with x0' = f(x0).
struct PinningConfig {
  DenseMatrix gain;  // n x n symmetric
  Vector target_initial;

  bool operator==(const PinningConfig&) const = default;
};

/// N nodes with n-dimensional state coupled through W >= 2 layers, each an
/// (outer N x N, inner n x n) matrix pair, scaled by eta / C(t).
class MultiWeightNetwork {
 public:
  MultiWeightNetwork(std::vector<DenseMatrix> ocms, std::vector<DenseMatrix> icms, double eta,
                     Regulator regulator, std::optional<PinningConfig> pinning = std::nullopt,
                     double rel_tol = kStructuralTolerance)
      : ocms_(std::move(ocms)),
        icms_(std::move(icms)),
        eta_(eta),
        regulator_(std::move(regulator)),
        pinning_(std::move(pinning)) {
    validate(rel_tol);
  }

  std::size_t nodes() const noexcept { return ocms_.front().rows(); }
  std::size_t dims() const noexcept { return icms_.front().rows(); }
  std::size_t layers() const noexcept { return ocms_.size(); }
  const std::vector<DenseMatrix>& ocms() const noexcept { return ocms_; }
  const std::vector<DenseMatrix>& icms() const noexcept { return icms_; }
  double eta() const noexcept { return eta_; }
  const Regulator& regulator() const noexcept { return regulator_; }
  const std::optional<PinningConfig>& pinning() const noexcept { return pinning_; }
  bool pinned() const noexcept { return pinning_.has_value(); }

  MultiWeightNetwork with_eta(double eta) const {
    MultiWeightNetwork copy = *this;
    copy.eta_ = eta;
    copy.validate(kStructuralTolerance);
    return copy;
  }

  MultiWeightNetwork with_regulator(Regulator r) const {
    MultiWeightNetwork copy = *this;
    copy.regulator_ = std::move(r);
    copy.validate(kStructuralTolerance);
    return copy;
  }

  MultiWeightNetwork without_pinning() const {
    MultiWeightNetwork copy = *this;
    copy.pinning_.reset();
    return copy;
  }

  bool operator==(const MultiWeightNetwork&) const = default;

 private:
  void validate(double rel_tol) const {
    if (ocms_.size() < 2) throw Error(ErrorCode::InvalidParameters, "need W > 1 weight layers");
    if (ocms_.size() != icms_.size()) {
      throw Error(ErrorCode::DimensionMismatch, "one inner coupling matrix per layer");
    }
    const std::size_t n_nodes = ocms_.front().rows();
    const std::size_t n_dims = icms_.front().rows();
    for (std::size_t w = 0; w < ocms_.size(); ++w) {
      const DenseMatrix& m = ocms_[w];
      if (m.rows() != n_nodes || m.cols() != n_nodes) {
        throw Error(ErrorCode::DimensionMismatch, "outer matrix " + std::to_string(w + 1) +
                                                      " must be " + std::to_string(n_nodes) +
                                                      "x" + std::to_string(n_nodes));
      }
      if (!is_zero_row_sum(m, default_zero_tolerance(m, rel_tol))) {
        throw Error(ErrorCode::InvalidParameters,
                    "outer matrix " + std::to_string(w + 1) + " has nonzero row sums");
      }
      const DenseMatrix& g = icms_[w];
      if (g.rows() != n_dims || g.cols() != n_dims) {
        throw Error(ErrorCode::DimensionMismatch,
                    "inner matrix " + std::to_string(w + 1) + " has the wrong shape");
      }
      if (!is_symmetric(g)) {
        throw Error(ErrorCode::InvalidParameters,
                    "inner matrix " + std::to_string(w + 1) + " is not symmetric");
      }
    }
    if (!(eta_ > 0.0) || !std::isfinite(eta_)) {
      throw Error(ErrorCode::InvalidParameters, "coupling strength eta must be positive");
    }
    if (!regulator_.admissible()) {
      throw Error(ErrorCode::InvalidParameters,
                  "regulator does not make the integral of 1/C diverge (need ell >= 1)");
    }
    if (pinning_) {
      if (pinning_->gain.rows() != n_dims || pinning_->gain.cols() != n_dims) {
        throw Error(ErrorCode::DimensionMismatch, "pinning gain must be n x n");
      }
      if (!is_symmetric(pinning_->gain)) {
        throw Error(ErrorCode::InvalidParameters, "pinning gain is not symmetric");
      }
      if (pinning_->target_initial.size() != n_dims) {
        throw Error(ErrorCode::DimensionMismatch, "pinning target must have n components");
      }
      for (double v : pinning_->target_initial)
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameters, "target is not finite");
    }
  }

  std::vector<DenseMatrix> ocms_;
  std::vector<DenseMatrix> icms_;
  double eta_;
  Regulator regulator_;
  std::optional<PinningConfig> pinning_;
};

/// Per-dimension sum matrices M^[de] = sum_w gamma^w_de M^w, optionally with
/// the pinning term diag(gamma_de, 0, ..., 0) subtracted.
struct SumMatrixSet {
  std::size_t dims = 0;
  std::vector<DenseMatrix> blocks;  // row-major dims x dims grid of N x N blocks
  bool diagonal_only = false;
  bool pinned = false;

  std::size_t nodes() const { return blocks.front().rows(); }
  const DenseMatrix& block(std::size_t d, std::size_t e) const { return blocks[d * dims + e]; }

  /// The nN x nN matrix with block (d, e) = M^[de].
  DenseMatrix stacked() const {
    const std::size_t n_nodes = nodes();
    DenseMatrix out(dims * n_nodes, dims * n_nodes);
    for (std::size_t d = 0; d < dims; ++d)
      for (std::size_t e = 0; e < dims; ++e) {
        const DenseMatrix& b = block(d, e);
        for (std::size_t i = 0; i < n_nodes; ++i)
          for (std::size_t j = 0; j < n_nodes; ++j) out(d * n_nodes + i, e * n_nodes + j) = b(i, j);
      }
    return out;
  }
};

inline SumMatrixSet build_sum_matrices(const MultiWeightNetwork& net, bool with_pinning) {
  if (with_pinning && !net.pinned()) {
    throw Error(ErrorCode::MissingPinning, "network has no pinning configuration");
  }
  const std::size_t n = net.dims();
  const std::size_t n_nodes = net.nodes();
  SumMatrixSet s;
  s.dims = n;
  s.pinned = with_pinning;
  s.diagonal_only = true;
  for (const DenseMatrix& g : net.icms()) s.diagonal_only = s.diagonal_only && g.is_diagonal();
  if (with_pinning) s.diagonal_only = s.diagonal_only && net.pinning()->gain.is_diagonal();

  s.blocks.reserve(n * n);
  for (std::size_t d = 0; d < n; ++d)
    for (std::size_t e = 0; e < n; ++e) {
      DenseMatrix block(n_nodes, n_nodes);
      for (std::size_t w = 0; w < net.layers(); ++w) {
        const double gamma = net.icms()[w](d, e);
        if (gamma != 0.0) block += gamma * net.ocms()[w];
      }
      if (with_pinning) block(0, 0) -= net.pinning()->gain(d, e);
      s.blocks.push_back(std::move(block));
    }
  return s;
}

enum class A1Failure { None, NegativeOffDiagonal, NonzeroRowSum, NotStronglyConnected };

constexpr std::string_view to_string(A1Failure f) noexcept {
  switch (f) {
    case A1Failure::None: return "None";
    case A1Failure::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case A1Failure::NonzeroRowSum: return "NonzeroRowSum";
    case A1Failure::NotStronglyConnected: return "NotStronglyConnected";
  }
  return "None";
}

struct A1Verdict {
  bool holds = true;
  A1Failure reason = A1Failure::None;
  std::string detail;
};

/// Membership in A1: nonnegative off-diagonals, zero row sums, irreducible.
/// The spectral condition follows from these three for this matrix class.
inline A1Verdict check_a1(const DenseMatrix& m, double rel_tol = kStructuralTolerance) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "A1 check needs a square matrix");
  const double tol = default_zero_tolerance(m, rel_tol);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) < -tol) {
        return {false, A1Failure::NegativeOffDiagonal,
                "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") = " +
                    std::to_string(m(i, j))};
      }
  if (!is_zero_row_sum(m, tol)) return {false, A1Failure::NonzeroRowSum, "row sums are not zero"};
  const SccResult scc = strongly_connected_components(m);
  if (scc.count != 1) {
    return {false, A1Failure::NotStronglyConnected,
            std::to_string(scc.count) + " strongly connected components"};
  }
  return {};
}

inline std::vector<A1Verdict> check_assumption_a1(const SumMatrixSet& s,
                                                  double rel_tol = kStructuralTolerance) {
  if (s.pinned) {
    throw Error(ErrorCode::InvalidParameters, "A1 is checked on the un-pinned sum matrices");
  }
  std::vector<A1Verdict> out;
  out.reserve(s.dims);
  for (std::size_t d = 0; d < s.dims; ++d) out.push_back(check_a1(s.block(d, d), rel_tol));
  return out;
}

/// psi^[d] for every diagonal block.
inline std::vector<Vector> compute_nlevecs(const SumMatrixSet& s,
                                           double rel_tol = kStructuralTolerance) {
  std::vector<Vector> out;
  out.reserve(s.dims);
  for (std::size_t d = 0; d < s.dims; ++d) out.push_back(left_null_vector(s.block(d, d), rel_tol));
  return out;
}

/// Symmetric stacked matrix (W M + M^T W) / 2 with block-diagonal weight W.
///
/// pinned = false: W block d is Psi^[d] - psi^[d] psi^[d]^T (the M-bar matrix).
/// pinned = true:  W block d is diag(psi^[d]) (the M-tilde matrix).
inline DenseMatrix assemble_stacked(const SumMatrixSet& s, const std::vector<Vector>& nlevecs,
                                    bool pinned) {
  const std::size_t n = s.dims;
  const std::size_t n_nodes = s.nodes();
  if (nlevecs.size() != n) throw Error(ErrorCode::DimensionMismatch, "one psi per dimension");
  for (const Vector& psi : nlevecs)
    if (psi.size() != n_nodes) throw Error(ErrorCode::DimensionMismatch, "psi length != N");

  const std::size_t m = n * n_nodes;
  const DenseMatrix big = s.stacked();
  DenseMatrix weight(m, m);
  for (std::size_t d = 0; d < n; ++d) {
    const Vector& psi = nlevecs[d];
    for (std::size_t i = 0; i < n_nodes; ++i) {
      for (std::size_t j = 0; j < n_nodes; ++j) {
        double v = pinned ? 0.0 : -psi[i] * psi[j];
        if (i == j) v += psi[i];
        weight(d * n_nodes + i, d * n_nodes + j) = v;
      }
    }
  }
  const DenseMatrix product = weight * big;
  DenseMatrix out(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = 0.5 * (product(i, j) + product(j, i));
  return out;
}

/// Orthonormal basis (columns) of the per-block transverse space
/// {R : sum of R over each block = 0}, built from Helmert vectors.
inline DenseMatrix transverse_basis(std::size_t block_size, std::size_t blocks) {
  if (block_size < 2) {
    throw Error(ErrorCode::NotNegativeInTS, "a single node has no transverse space");
  }
  const std::size_t k = block_size - 1;
  DenseMatrix q(block_size * blocks, k * blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t c = 0; c < k; ++c) {
      // c-th Helmert vector: (1, ..., 1, -(c+1), 0, ...) / sqrt((c+1)(c+2))
      const double len = std::sqrt(static_cast<double>((c + 1) * (c + 2)));
      for (std::size_t i = 0; i <= c; ++i) q(b * block_size + i, b * k + c) = 1.0 / len;
      q(b * block_size + c + 1, b * k + c) = -static_cast<double>(c + 1) / len;
    }
  }
  return q;
}

/// Largest eigenvalue of Mbar restricted to the transverse space: each
/// block's all-ones direction is deflated by projecting onto an orthonormal
/// complement before the eigensolve.
inline double fiedler_lambda2(const DenseMatrix& mbar, std::size_t block_size,
                              std::size_t blocks) {
  if (!mbar.is_square() || mbar.rows() != block_size * blocks) {
    throw Error(ErrorCode::DimensionMismatch, "stacked matrix does not match block layout");
  }
  const DenseMatrix q = transverse_basis(block_size, blocks);
  const DenseMatrix reduced = symmetric_part(q.transpose() * mbar * q);
  const double lambda = symmetric_eigen(reduced).max();
  if (!(lambda < -kStructuralTolerance * mbar.frobenius_norm())) {
    throw Error(ErrorCode::NotNegativeInTS,
                "largest transverse eigenvalue " + std::to_string(lambda) + " is not negative");
  }
  return lambda;
}

/// Transverse eigenvalue via the diagonal-inner-matrix route: one
/// (Psi M + M^T Psi)/2 matrix per dimension, maximum over dimensions.
inline double blockwise_lambda2(const SumMatrixSet& s, const std::vector<Vector>& nlevecs) {
  if (!s.diagonal_only) {
    throw Error(ErrorCode::InvalidParameters, "blockwise route needs diagonal inner matrices");
  }
  const std::size_t n_nodes = s.nodes();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < s.dims; ++d) {
    const DenseMatrix& m = s.block(d, d);
    const DenseMatrix weighted = DenseMatrix::diagonal(nlevecs[d]) * m;
    const DenseMatrix sym = symmetric_part(weighted);
    const DenseMatrix q = transverse_basis(n_nodes, 1);
    best = std::max(best, symmetric_eigen(symmetric_part(q.transpose() * sym * q)).max());
  }
  return best;
}

/// Largest eigenvalue of M-tilde via the diagonal route, maximum over dimensions.
inline double blockwise_lambda_max(const SumMatrixSet& pinned_sums,
                                   const std::vector<Vector>& nlevecs) {
  if (!pinned_sums.diagonal_only) {
    throw Error(ErrorCode::InvalidParameters, "blockwise route needs diagonal inner matrices");
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t d = 0; d < pinned_sums.dims; ++d) {
    const DenseMatrix weighted = DenseMatrix::diagonal(nlevecs[d]) * pinned_sums.block(d, d);
    best = std::max(best, symmetric_eigen(symmetric_part(weighted)).max());
  }
  return best;
}

enum class ThresholdMode { synchronization, pinning };

constexpr std::string_view to_string(ThresholdMode m) noexcept {
  return m == ThresholdMode::pinning ? "pinning" : "synchronization";
}

struct ValidationReport {
  ThresholdMode mode = ThresholdMode::synchronization;
  std::vector<A1Verdict> a1;
  std::vector<Vector> nlevecs;
  std::optional<double> lambda2;     // synchronization case
  std::optional<double> lambda_max;  // pinning case
  double hf = 0.0;
  double c0 = 0.0;
  double threshold = 0.0;
  double eta = 0.0;
  bool eta_sufficient = false;

  bool assumptions_hold() const {
    for (const A1Verdict& v : a1)
      if (!v.holds) return false;
    return true;
  }
};

/// Sufficient coupling strength (Hf C(0) + 1) / |lambda| where lambda is the
/// transverse eigenvalue of M-bar (no pinning) or the top eigenvalue of
/// M-tilde (pinning on node 1).
///
/// Hf >= 0 is accepted so the Hf -> 0 limit can be evaluated.
inline ValidationReport compute_threshold(const MultiWeightNetwork& net, double hf,
                                          double rel_tol = kStructuralTolerance) {
  if (!(hf >= 0.0) || !std::isfinite(hf)) {
    throw Error(ErrorCode::InvalidParameters, "Hf must be finite and nonnegative");
  }
  ValidationReport report;
  report.mode = net.pinned() ? ThresholdMode::pinning : ThresholdMode::synchronization;
  report.hf = hf;
  report.c0 = net.regulator().at_start();
  report.eta = net.eta();

  const SumMatrixSet sums = build_sum_matrices(net, false);
  report.a1 = check_assumption_a1(sums, rel_tol);
  if (!report.assumptions_hold()) {
    throw Error(ErrorCode::AssumptionViolated, "a diagonal sum matrix is not in A1");
  }
  report.nlevecs = compute_nlevecs(sums, rel_tol);

  double lambda = 0.0;
  if (report.mode == ThresholdMode::synchronization) {
    const DenseMatrix mbar = assemble_stacked(sums, report.nlevecs, false);
    try {
      lambda = fiedler_lambda2(mbar, net.nodes(), net.dims());
    } catch (const Error& e) {
      throw Error(ErrorCode::NotNegativeDefinite, e.what());
    }
    report.lambda2 = lambda;
  } else {
    const SumMatrixSet pinned = build_sum_matrices(net, true);
    const DenseMatrix mtilde = assemble_stacked(pinned, report.nlevecs, true);
    lambda = symmetric_eigen(mtilde).max();
    if (!(lambda < -kStructuralTolerance * mtilde.frobenius_norm())) {
      throw Error(ErrorCode::NotNegativeDefinite,
                  "largest eigenvalue of the pinned matrix is " + std::to_string(lambda));
    }
    report.lambda_max = lambda;
  }
  report.threshold = (hf * report.c0 + 1.0) / std::abs(lambda);
  report.eta_sufficient = net.eta() > report.threshold;
  return report;
}

}  // namespace ptsync
