#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptsync/errors.hpp"

namespace ptsync {

/// Relative zero tolerance used by the structural checks. It is scaled by the
/// largest absolute entry of the matrix under test.
inline constexpr double kStructuralTolerance = 1e-9;

using Vector = std::vector<double>;

/// Small dense real matrix stored row-major. Entries are finite at construction.
class DenseMatrix {
 public:
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_shape();
    check_finite();
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    check_shape();
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "expected " + std::to_string(rows_ * cols_) + " entries, got " +
                      std::to_string(data_.size()));
    }
    check_finite();
  }

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
      throw Error(ErrorCode::DimensionMismatch, "matrix needs at least one row and column");
    }
    const std::size_t cols = rows.front().size();
    std::vector<double> entries;
    entries.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw Error(ErrorCode::DimensionMismatch, "ragged matrix rows");
      entries.insert(entries.end(), r.begin(), r.end());
    }
    return DenseMatrix(rows.size(), cols, std::move(entries));
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<const double> entries() const noexcept { return data_; }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  std::vector<std::vector<double>> to_rows() const {
    std::vector<std::vector<double>> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
    return out;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  /// Maximum absolute row sum.
  double inf_norm() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (double v : row(i)) s += std::abs(v);
      m = std::max(m, s);
    }
    return m;
  }

  bool is_diagonal() const noexcept {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j)
        if (i != j && (*this)(i, j) != 0.0) return false;
    return true;
  }

  DenseMatrix& operator+=(const DenseMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  DenseMatrix& operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
  }

  friend DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
  friend DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
  friend DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

  friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols_ != b.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix product shape");
    DenseMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw Error(ErrorCode::DimensionMismatch, "matrix-vector shape");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  void check_shape() const {
    if (rows_ == 0 || cols_ == 0) {
      throw Error(ErrorCode::DimensionMismatch, "matrix dimensions must be positive");
    }
  }
  void check_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) throw Error(ErrorCode::InvalidParameters, "matrix entry is not finite");
  }
  void require_same_shape(const DenseMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) {
      throw Error(ErrorCode::DimensionMismatch, "matrix shapes differ");
    }
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Symmetrized copy (A + A^T) / 2.
inline DenseMatrix symmetric_part(const DenseMatrix& a) {
  if (!a.is_square()) throw Error(ErrorCode::NonSquare, "symmetric part of non-square matrix");
  DenseMatrix s = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

/// max_i sum_j |A_ij - A_ji|
inline double asymmetry(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += std::abs(a(i, j) - a(j, i));
    m = std::max(m, s);
  }
  return m;
}

inline bool is_symmetric(const DenseMatrix& a, double rel_tol = 1e-12) {
  return a.is_square() && asymmetry(a) <= rel_tol * std::max(1.0, a.inf_norm());
}

struct SpectrumResult {
  /// Sorted descending.
  Vector eigenvalues;
  /// Column k is the unit eigenvector for eigenvalues[k].
  DenseMatrix eigenvectors;

  double max() const { return eigenvalues.front(); }
  double min() const { return eigenvalues.back(); }
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps continue until the off-diagonal Frobenius norm drops below
/// 1e-12 * ||A||_F. Cost is O(m^3) per sweep; intended for m up to a few hundred.
inline SpectrumResult symmetric_eigen(const DenseMatrix& input) {
  if (!input.is_square()) throw Error(ErrorCode::NonSquare, "symmetric_eigen needs a square matrix");
  if (!is_symmetric(input)) {
    throw Error(ErrorCode::NotSymmetric,
                "asymmetry " + std::to_string(asymmetry(input)) + " exceeds tolerance");
  }
  const std::size_t m = input.rows();
  DenseMatrix a = symmetric_part(input);
  DenseMatrix v = DenseMatrix::identity(m);
  const double fro = a.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= 1e-12 * fro) break;
    for (std::size_t p = 0; p + 1 < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
  SpectrumResult out{Vector(m), DenseMatrix(m, m)};
  for (std::size_t k = 0; k < m; ++k) {
    out.eigenvalues[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < m; ++r) out.eigenvectors(r, k) = v(r, order[k]);
  }
  return out;
}

/// Spectral norm via the largest eigenvalue of A^T A.
inline double spectral_norm(const DenseMatrix& a) {
  const SpectrumResult s = symmetric_eigen(a.transpose() * a);
  return std::sqrt(std::max(0.0, s.max()));
}

/// LU factorization with complete pivoting: P A Q = L U, L unit lower.
struct PivotedLu {
  DenseMatrix lu;
  std::vector<std::size_t> row_perm;  // row k of PA is row row_perm[k] of A
  std::vector<std::size_t> col_perm;  // column k of AQ is column col_perm[k] of A

  double pivot(std::size_t k) const { return lu(k, k); }
};

inline PivotedLu lu_complete_pivot(const DenseMatrix& a) {
  if (!a.is_square()) throw Error(ErrorCode::NonSquare, "LU needs a square matrix");
  const std::size_t m = a.rows();
  PivotedLu f{a, std::vector<std::size_t>(m), std::vector<std::size_t>(m)};
  std::iota(f.row_perm.begin(), f.row_perm.end(), 0);
  std::iota(f.col_perm.begin(), f.col_perm.end(), 0);
  DenseMatrix& u = f.lu;
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t pr = k, pc = k;
    double best = -1.0;
    for (std::size_t i = k; i < m; ++i)
      for (std::size_t j = k; j < m; ++j)
        if (std::abs(u(i, j)) > best) {
          best = std::abs(u(i, j));
          pr = i;
          pc = j;
        }
    if (pr != k) {
      for (std::size_t j = 0; j < m; ++j) std::swap(u(k, j), u(pr, j));
      std::swap(f.row_perm[k], f.row_perm[pr]);
    }
    if (pc != k) {
      for (std::size_t i = 0; i < m; ++i) std::swap(u(i, k), u(i, pc));
      std::swap(f.col_perm[k], f.col_perm[pc]);
    }
    const double piv = u(k, k);
    if (piv == 0.0) continue;
    for (std::size_t i = k + 1; i < m; ++i) {
      const double l = u(i, k) / piv;
      u(i, k) = l;
      for (std::size_t j = k + 1; j < m; ++j) u(i, j) -= l * u(k, j);
    }
  }
  return f;
}

/// Solves A x = b with the factorization; pivots with |u_kk| < floor are
/// replaced by +-floor (inverse iteration on a singular matrix).
inline Vector lu_solve(const PivotedLu& f, std::span<const double> b, double floor = 0.0) {
  const std::size_t m = f.lu.rows();
  Vector y(m);
  for (std::size_t k = 0; k < m; ++k) {
    double s = b[f.row_perm[k]];
    for (std::size_t j = 0; j < k; ++j) s -= f.lu(k, j) * y[j];
    y[k] = s;
  }
  for (std::size_t k = m; k-- > 0;) {
    double s = y[k];
    for (std::size_t j = k + 1; j < m; ++j) s -= f.lu(k, j) * y[j];
    double piv = f.lu(k, k);
    if (std::abs(piv) < floor) piv = piv < 0.0 ? -floor : floor;
    y[k] = s / piv;
  }
  Vector x(m);
  for (std::size_t k = 0; k < m; ++k) x[f.col_perm[k]] = y[k];
  return x;
}

inline double default_zero_tolerance(const DenseMatrix& m, double rel_tol = kStructuralTolerance) {
  return rel_tol * std::max(1.0, m.max_abs());
}

inline bool is_zero_row_sum(const DenseMatrix& m, double tol) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "zero-row-sum check needs a square matrix");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (double v : m.row(i)) s += v;
    if (std::abs(s) > tol) return false;
  }
  return true;
}

/// Normalized positive left null vector psi (psi^T M = 0, sum psi = 1).
///
/// The kernel dimension is read off the complete-pivoting LU of M^T by
/// counting pivots below rel_tol * max|M_ij|; exactly one is required. The
/// vector is obtained by back substitution and polished by two steps of
/// inverse iteration with shift zero.
inline Vector left_null_vector(const DenseMatrix& m, double rel_tol = kStructuralTolerance) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "left_null_vector needs a square matrix");
  const std::size_t n = m.rows();
  const double scale = m.max_abs();
  const double tol = rel_tol * scale;
  const PivotedLu f = lu_complete_pivot(m.transpose());

  std::size_t singular = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(f.pivot(k)) <= tol) ++singular;
  if (singular != 1) {
    throw Error(ErrorCode::DegenerateKernel,
                "numerical kernel dimension is " + std::to_string(singular) + ", expected 1");
  }

  // Complete pivoting pushes the vanishing pivot to the last position.
  Vector y(n, 0.0);
  y[n - 1] = 1.0;
  for (std::size_t k = n - 1; k-- > 0;) {
    double s = 0.0;
    for (std::size_t j = k + 1; j < n; ++j) s -= f.lu(k, j) * y[j];
    y[k] = s / f.pivot(k);
  }
  Vector psi(n);
  for (std::size_t k = 0; k < n; ++k) psi[f.col_perm[k]] = y[k];

  const double floor = std::max(scale, 1.0) * 1e-14;
  for (int it = 0; it < 2; ++it) {
    Vector next = lu_solve(f, psi, floor);
    const double nrm = norm2(next);
    if (!(nrm > 0.0) || !std::isfinite(nrm)) break;
    for (std::size_t i = 0; i < n; ++i) psi[i] = next[i] / nrm;
  }

  double sum = std::accumulate(psi.begin(), psi.end(), 0.0);
  if (sum == 0.0) throw Error(ErrorCode::NonPositiveEntry, "kernel vector sums to zero");
  for (double& v : psi) v /= sum;
  for (std::size_t i = 0; i < n; ++i) {
    if (psi[i] <= 1e-14) {
      throw Error(ErrorCode::NonPositiveEntry,
                  "kernel component " + std::to_string(i) + " is " + std::to_string(psi[i]));
    }
  }
  sum = std::accumulate(psi.begin(), psi.end(), 0.0);
  for (double& v : psi) v /= sum;

  const Vector residual = m.transpose() * std::span<const double>(psi);
  if (norm2(residual) > 1e-9 * std::max(m.frobenius_norm(), 1e-300)) {
    throw Error(ErrorCode::DegenerateKernel, "left null vector residual too large");
  }
  return psi;
}

struct SccResult {
  /// component[i] is the component index of node i.
  std::vector<std::size_t> component;
  std::size_t count = 0;
};

/// Tarjan's algorithm (iterative) on the digraph with arc i->j whenever i != j
/// and M_ij != 0.
inline SccResult strongly_connected_components(const DenseMatrix& m) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "SCC needs a square matrix");
  const std::size_t n = m.rows();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  SccResult out{std::vector<std::size_t>(n, kUnset), 0};
  std::size_t counter = 0;

  struct Frame {
    std::size_t node;
    std::size_t next;
  };
  std::vector<Frame> call;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& fr = call.back();
      const std::size_t v = fr.node;
      bool descended = false;
      while (fr.next < n) {
        const std::size_t w = fr.next++;
        if (w == v || m(v, w) == 0.0) continue;
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          out.component[w] = out.count;
        } while (w != v);
        ++out.count;
      }
      call.pop_back();
      if (!call.empty()) {
        const std::size_t parent = call.back().node;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  return out;
}

/// Irreducibility test: the off-diagonal sparsity digraph is one SCC.
inline bool is_strongly_connected(const DenseMatrix& m) {
  return strongly_connected_components(m).count == 1;
}

}  // namespace ptsync
