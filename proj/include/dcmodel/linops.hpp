#pragma once

// Dense complex linear algebra used by every other module: adjoints, norms,
// Hermitian square roots, shifted resolvents, orthonormalization, projectors
// and subspace comparison.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "dcmodel/error.hpp"

namespace dcmodel {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// An orthonormal basis (as matrix columns) of a subspace of C^ambient_dim.
struct Subspace {
  Index ambient_dim = 0;
  Matrix basis;

  Index dim() const { return basis.cols(); }
};

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

/// Largest singular value.
inline double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

/// Operator norm of a Hermitian matrix via its spectrum.
inline double hermitian_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline Matrix identity(Index n) { return Matrix::Identity(n, n); }

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Hermitian positive semidefinite square root by full eigendecomposition.
/// Eigenvalues in [-tol, 0) are clamped to zero.
inline Matrix hermitian_sqrt(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw Error(Errc::DimensionMismatch, "hermitian_sqrt needs a square matrix");
  if (!all_finite(a)) throw Error(Errc::InvalidArgument, "hermitian_sqrt: non-finite entries");
  if (a.size() == 0) return a;
  const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol) throw Error(Errc::NotHermitian, "asymmetry " + std::to_string(asym));
  Matrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol) throw Error(Errc::NegativeEigenvalue, "eigenvalue " + std::to_string(ev(i)));
    ev(i) = ev(i) < 0.0 ? 0.0 : std::sqrt(ev(i));
  }
  const Matrix& v = es.eigenvectors();
  Matrix root = v * ev.cast<Complex>().asDiagonal() * v.adjoint();
  return 0.5 * (root + root.adjoint());
}

inline constexpr double kSingularShiftCondition = 1e12;

/// (I - zT)^{-1} by a pivoted LU solve.
inline Matrix solve_shifted(const Matrix& t, Complex z) {
  if (t.rows() != t.cols()) throw Error(Errc::DimensionMismatch, "solve_shifted needs a square matrix");
  const Index n = t.rows();
  if (n == 0) return t;
  Matrix shifted = identity(n) - z * t;
  Eigen::PartialPivLU<Matrix> lu(shifted);
  const double rcond = lu.rcond();
  if (!(rcond * kSingularShiftCondition > 1.0))
    throw Error(Errc::SingularShift, "I - zT is numerically singular (rcond " + std::to_string(rcond) + ")");
  return lu.solve(identity(n));
}

enum class Pivoting {
  LargestNorm,  // next column = largest remaining norm, ties to the lowest index
  InOrder,      // columns taken left to right
};

/// Modified Gram-Schmidt with one reorthogonalization pass. A column is kept
/// while its remaining norm exceeds rank_tol times the largest input column norm.
inline Subspace orthonormalize(const Matrix& vectors, double rank_tol,
                               Pivoting pivoting = Pivoting::LargestNorm) {
  Subspace out;
  out.ambient_dim = vectors.rows();
  const Index m = vectors.cols();
  if (m == 0 || vectors.rows() == 0) {
    out.basis = Matrix(vectors.rows(), 0);
    return out;
  }
  Matrix work = vectors;
  Eigen::VectorXd norms = work.colwise().norm().transpose();
  const double scale = norms.maxCoeff();
  if (scale == 0.0) {
    out.basis = Matrix(vectors.rows(), 0);
    return out;
  }
  const double threshold = rank_tol * scale;
  std::vector<bool> used(static_cast<size_t>(m), false);
  std::vector<Vector> kept;
  for (Index step = 0; step < m; ++step) {
    Index pick = -1;
    if (pivoting == Pivoting::LargestNorm) {
      double best = -1.0;
      for (Index j = 0; j < m; ++j) {
        if (used[static_cast<size_t>(j)]) continue;
        const double nj = work.col(j).norm();
        if (nj > best) {
          best = nj;
          pick = j;
        }
      }
    } else {
      pick = step;
    }
    used[static_cast<size_t>(pick)] = true;
    Vector q = work.col(pick);
    for (const auto& prev : kept) q -= prev * prev.dot(q);
    const double nq = q.norm();
    if (nq <= threshold) {
      if (pivoting == Pivoting::LargestNorm) break;
      continue;
    }
    q /= nq;
    kept.push_back(q);
    for (Index j = 0; j < m; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      work.col(j) -= q * q.dot(work.col(j));
    }
  }
  out.basis = Matrix(vectors.rows(), static_cast<Index>(kept.size()));
  for (size_t i = 0; i < kept.size(); ++i) out.basis.col(static_cast<Index>(i)) = kept[i];
  return out;
}

inline Matrix projector(const Subspace& s) {
  if (s.dim() == 0) return Matrix::Zero(s.ambient_dim, s.ambient_dim);
  return s.basis * s.basis.adjoint();
}

/// Operator norm of the difference of the orthogonal projectors.
inline double subspace_distance(const Subspace& a, const Subspace& b) {
  if (a.ambient_dim != b.ambient_dim)
    throw Error(Errc::DimensionMismatch, "subspaces live in different ambient spaces");
  if (a.ambient_dim == 0) return 0.0;
  const double d = hermitian_norm(projector(a) - projector(b));
  return std::clamp(d, 0.0, 1.0);
}

/// Orthonormal basis of {x : ||a x|| <= tol * sigma_max(a)}.
inline Subspace null_space(const Matrix& a, double tol) {
  Subspace out;
  out.ambient_dim = a.cols();
  if (a.cols() == 0) {
    out.basis = Matrix(0, 0);
    return out;
  }
  if (a.rows() == 0) {
    out.basis = identity(a.cols());
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cut = tol * (sv.size() > 0 ? sv(0) : 0.0);
  std::vector<Index> keep;
  for (Index i = 0; i < a.cols(); ++i)
    if (i >= sv.size() || sv(i) <= cut) keep.push_back(i);
  out.basis = Matrix(a.cols(), static_cast<Index>(keep.size()));
  for (size_t i = 0; i < keep.size(); ++i) out.basis.col(static_cast<Index>(i)) = svd.matrixV().col(keep[i]);
  return out;
}

/// Upper estimate of the spectral radius, ||A^K||^{1/K}, by repeated squaring
/// with renormalization. K starts at min_power and doubles (up to 2^20) while
/// the estimate is still at least `certify_below`.
inline double spectral_radius_estimate(const Matrix& a, int min_power = 64, double certify_below = 0.0) {
  if (a.rows() != a.cols()) throw Error(Errc::DimensionMismatch, "spectral radius needs a square matrix");
  if (a.size() == 0) return 0.0;
  double n0 = op_norm(a);
  if (n0 == 0.0) return 0.0;
  Matrix c = a / n0;
  double log_norm = std::log(n0);  // ||A^(2^j)|| = exp(log_norm) * ||c|| with ||c|| = 1
  long long power = 1;
  double estimate = n0;
  while (true) {
    Matrix sq = c * c;
    const double m = op_norm(sq);
    power *= 2;
    if (m == 0.0 || !std::isfinite(m)) return 0.0;
    log_norm = 2.0 * log_norm + std::log(m);
    c = sq / m;
    estimate = std::exp(log_norm / static_cast<double>(power));
    if (power >= min_power && (estimate < certify_below || power >= (1LL << 20))) break;
    if (power >= min_power && certify_below <= 0.0) break;
  }
  return estimate;
}

/// Relative rank of a matrix from its singular values.
inline Index numerical_rank(const Matrix& a, double rel_tol) {
  if (a.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

}  // namespace dcmodel
