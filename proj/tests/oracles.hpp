#pragma once

// Independent reference computations. Nothing here calls into the library's
// numerical routines, so agreement is a genuine cross-check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) = a(i / b.rows(), j / b.cols()) * b(i % b.rows(), j % b.cols());
  return out;
}

inline double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

inline int rank(const Matrix& a, double rel = 1e-10) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel * s(0)) ++r;
  return r;
}

/// Gap between equal-dimensional subspaces: sine of the largest principal angle.
inline double principal_gap(const Matrix& qa, const Matrix& qb) {
  Eigen::JacobiSVD<Matrix> svd(qa.adjoint() * qb);
  const double c = svd.singularValues().minCoeff();
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

/// (I - zT)^{-1} as a partial Neumann sum.
inline Matrix neumann(const Matrix& t, Complex z, int terms) {
  Matrix out = Matrix::Identity(t.rows(), t.cols());
  Matrix p = out;
  for (int k = 1; k < terms; ++k) {
    p = z * p * t;
    out += p;
  }
  return out;
}

/// All exponent vectors of length n with total degree <= d, in graded order
/// with descending lex inside each degree.
inline std::vector<std::vector<int>> monomials(int n, int d) {
  std::vector<std::vector<int>> all;
  std::vector<int> cur(static_cast<size_t>(n), 0);
  std::function<void(int)> rec = [&](int k) {
    if (k == n) {
      int s = 0;
      for (int v : cur) s += v;
      if (s <= d) all.push_back(cur);
      return;
    }
    for (int v = 0; v <= d; ++v) {
      cur[static_cast<size_t>(k)] = v;
      rec(k + 1);
    }
  };
  rec(0);
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    int da = 0, db = 0;
    for (int v : a) da += v;
    for (int v : b) db += v;
    if (da != db) return da < db;
    return a > b;
  });
  return all;
}

/// Taylor coefficients of an analytic f by the trapezoid rule on |z| = r.
inline std::vector<Complex> taylor(const std::function<Complex(Complex)>& f, int degree, double r = 0.5,
                                   int nodes = 256) {
  std::vector<Complex> c(static_cast<size_t>(degree + 1), Complex(0.0));
  for (int j = 0; j < nodes; ++j) {
    const double t = 2.0 * std::numbers::pi * j / nodes;
    const Complex w = std::polar(1.0, t);
    const Complex v = f(r * w);
    for (int k = 0; k <= degree; ++k) c[static_cast<size_t>(k)] += v * std::pow(std::conj(w), k);
  }
  for (int k = 0; k <= degree; ++k) c[static_cast<size_t>(k)] /= nodes * std::pow(r, k);
  return c;
}

inline Complex horner(const std::vector<Complex>& c, Complex z) {
  Complex v(0.0);
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * z + *it;
  return v;
}

/// ||prod_i phi_{lambda_i}(zeta_i) - 1||^2 from numerically extracted Taylor
/// coefficients: factors live in distinct variables, so the product norm is
/// the product of the one-variable norms.
inline double mobius_partial_distance(const std::vector<Complex>& lambda, int m, int n, int degree = 150) {
  double prod_norm = 1.0;
  Complex at_zero(1.0);
  for (int i = m; i < n; ++i) {
    const Complex a = lambda[static_cast<size_t>(i)];
    const auto c = taylor([a](Complex z) { return (a - z) / (1.0 - std::conj(a) * z); }, degree, 0.95, 1024);
    double s = 0.0;
    for (const auto& v : c) s += std::norm(v);
    prod_norm *= s;
    at_zero *= c[0];
  }
  return prod_norm - 2.0 * at_zero.real() + 1.0;
}

}  // namespace oracle
