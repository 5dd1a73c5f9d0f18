#pragma once

// Finite doubly commuting tuples of C.0 contractions: validation, defect
// operators, the Moebius and finite Blaschke functional calculus, and the
// tensor-product recipe for generating doubly commuting tuples.

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dcmodel/linops.hpp"

namespace dcmodel {

/// Largest admissible ||T|| - 1 for a matrix to count as a contraction.
inline constexpr double kContractionSlack = 1e-10;
/// C.0 certificate margin: spectral-radius estimate must be <= 1 - kC00Margin.
inline constexpr double kC00Margin = 1e-6;
/// Power used by the spectral-radius estimate before any escalation.
inline constexpr int kSpectralPower = 64;
/// Clamp window handed to hermitian_sqrt when forming defects.
inline constexpr double kDefectSqrtTol = 1e-9;

/// Components T_1..T_n of a sequence (T_1, ..., T_n, 0, 0, ...). Construction
/// only checks shapes; validate_tuple checks the operator-theoretic invariants.
class ContractionTuple {
 public:
  ContractionTuple() = default;

  ContractionTuple(Index space_dim, std::vector<Matrix> components)
      : space_dim_(space_dim), components_(std::move(components)) {
    check_shapes();
  }

  explicit ContractionTuple(std::vector<Matrix> components) : components_(std::move(components)) {
    space_dim_ = components_.empty() ? 0 : components_.front().rows();
    check_shapes();
  }

  Index space_dim() const { return space_dim_; }
  size_t size() const { return components_.size(); }
  const Matrix& operator[](size_t i) const { return components_[i]; }
  const std::vector<Matrix>& components() const { return components_; }

  ContractionTuple adjoint() const {
    std::vector<Matrix> adj;
    adj.reserve(components_.size());
    for (const auto& c : components_) adj.push_back(c.adjoint());
    return {space_dim_, std::move(adj)};
  }

  /// T^alpha = T_1^{alpha_1} ... T_n^{alpha_n}; exponents beyond size() must be zero.
  Matrix power(std::span<const int> exponents) const {
    Matrix out = identity(space_dim_);
    for (size_t k = 0; k < exponents.size(); ++k) {
      if (exponents[k] == 0) continue;
      if (k >= components_.size()) return Matrix::Zero(space_dim_, space_dim_);
      for (int p = 0; p < exponents[k]; ++p) out = out * components_[k];
    }
    return out;
  }

 private:
  void check_shapes() const {
    for (const auto& c : components_)
      if (c.rows() != space_dim_ || c.cols() != space_dim_)
        throw Error(Errc::DimensionMismatch, "tuple component is not " + std::to_string(space_dim_) + "x" +
                                                 std::to_string(space_dim_));
  }

  Index space_dim_ = 0;
  std::vector<Matrix> components_;
};

struct ValidationReport {
  std::vector<double> contraction_margin;  // 1 - ||T_i||
  std::vector<double> spectral_radius;     // power-norm estimate
  double max_commutator = 0.0;             // max ||[T_i, T_j]||
  double max_cross_commutator = 0.0;       // max ||[T_i^*, T_j]||, i != j
  bool pass = true;
};

inline ValidationReport validate_tuple(const ContractionTuple& t, double tol = kContractionSlack) {
  ValidationReport r;
  for (const auto& c : t.components()) {
    const double norm = op_norm(c);
    r.contraction_margin.push_back(1.0 - norm);
    const double rho = spectral_radius_estimate(c, kSpectralPower, 1.0 - kC00Margin);
    r.spectral_radius.push_back(rho);
    if (norm > 1.0 + tol || rho > 1.0 - kC00Margin) r.pass = false;
  }
  for (size_t i = 0; i < t.size(); ++i) {
    for (size_t j = i + 1; j < t.size(); ++j) {
      const Matrix& a = t[i];
      const Matrix& b = t[j];
      r.max_commutator = std::max(r.max_commutator, op_norm(a * b - b * a));
      r.max_cross_commutator = std::max(r.max_cross_commutator, op_norm(a.adjoint() * b - b * a.adjoint()));
      r.max_cross_commutator = std::max(r.max_cross_commutator, op_norm(b.adjoint() * a - a * b.adjoint()));
    }
  }
  if (r.max_commutator > tol || r.max_cross_commutator > tol) r.pass = false;
  return r;
}

inline void require_contraction(const Matrix& a, const char* where) {
  if (a.rows() != a.cols()) throw Error(Errc::DimensionMismatch, std::string(where) + ": matrix is not square");
  const double n = op_norm(a);
  if (n > 1.0 + kContractionSlack)
    throw Error(Errc::NotContraction, std::string(where) + ": norm " + std::to_string(n));
}

/// D_A = (I - A^*A)^{1/2}.
inline Matrix defect(const Matrix& a) {
  require_contraction(a, "defect");
  return hermitian_sqrt(identity(a.rows()) - a.adjoint() * a, kDefectSqrtTol);
}

/// D_{T_1} ... D_{T_n} in listed order; zero tail components contribute identities.
inline Matrix joint_defect(const ContractionTuple& t) {
  Matrix out = identity(t.space_dim());
  for (const auto& c : t.components()) out = out * defect(c);
  return out;
}

/// Finitely supported point of D^infinity.
class MoebiusPoint {
 public:
  MoebiusPoint() = default;
  explicit MoebiusPoint(std::vector<Complex> coords) : coords_(std::move(coords)) {
    for (const auto& c : coords_)
      if (!(std::abs(c) < 1.0)) throw Error(Errc::InvalidArgument, "Moebius coordinate outside the open disk");
    while (!coords_.empty() && coords_.back() == Complex(0.0)) coords_.pop_back();
  }

  size_t size() const { return coords_.size(); }
  Complex operator[](size_t k) const { return k < coords_.size() ? coords_[k] : Complex(0.0); }
  const std::vector<Complex>& coords() const { return coords_; }

 private:
  std::vector<Complex> coords_;
};

/// phi_a(z) = (a - z) / (1 - conj(a) z).
inline Complex mobius_scalar(Complex a, Complex z) { return (a - z) / (1.0 - std::conj(a) * z); }

/// phi_a(A) = (aI - A)(I - conj(a) A)^{-1}.
inline Matrix mobius(const Matrix& a_mat, Complex a) {
  require_contraction(a_mat, "mobius");
  if (!(std::abs(a) < 1.0)) throw Error(Errc::InvalidArgument, "Moebius parameter outside the open disk");
  const Index n = a_mat.rows();
  return (a * identity(n) - a_mat) * solve_shifted(a_mat, std::conj(a));
}

/// Componentwise phi_{lambda_k}(T_k). Coordinates of lambda past the listed
/// components act on zero operators and produce lambda_k I.
inline ContractionTuple mobius_tuple(const ContractionTuple& t, const MoebiusPoint& lambda) {
  const size_t n = std::max(t.size(), lambda.size());
  std::vector<Matrix> out;
  out.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    if (k < t.size())
      out.push_back(mobius(t[k], lambda[k]));
    else
      out.push_back(lambda[k] * identity(t.space_dim()));
  }
  return {t.space_dim(), std::move(out)};
}

/// Finite Blaschke product c * prod_i phi_{a_i}(z).
class BlaschkeProduct {
 public:
  BlaschkeProduct() = default;
  BlaschkeProduct(Complex unimodular_factor, std::vector<Complex> zeros)
      : factor_(unimodular_factor), zeros_(std::move(zeros)) {
    if (std::abs(std::abs(factor_) - 1.0) > 1e-12)
      throw Error(Errc::InvalidArgument, "Blaschke factor is not unimodular");
    for (const auto& a : zeros_)
      if (!(std::abs(a) < 1.0)) throw Error(Errc::InvalidArgument, "Blaschke zero outside the open disk");
  }

  /// The single factor phi_a.
  static BlaschkeProduct mobius(Complex a) { return {Complex(1.0), {a}}; }
  /// z^m, written as (-1)^m phi_0^m.
  static BlaschkeProduct power(int m) {
    return {m % 2 == 0 ? Complex(1.0) : Complex(-1.0), std::vector<Complex>(static_cast<size_t>(m), Complex(0.0))};
  }

  Complex unimodular_factor() const { return factor_; }
  const std::vector<Complex>& zeros() const { return zeros_; }
  int degree() const { return static_cast<int>(zeros_.size()); }

  Complex operator()(Complex z) const {
    Complex v = factor_;
    for (const auto& a : zeros_) v *= mobius_scalar(a, z);
    return v;
  }

  /// Taylor coefficients at 0 up to and including z^max_degree.
  std::vector<Complex> series(int max_degree) const {
    std::vector<Complex> out(static_cast<size_t>(max_degree + 1), Complex(0.0));
    out[0] = factor_;
    std::vector<Complex> factor(out.size());
    for (const auto& a : zeros_) {
      // phi_a(z) = a + sum_{k>=1} (|a|^2 - 1) conj(a)^{k-1} z^k
      factor[0] = a;
      Complex p(1.0);
      for (size_t k = 1; k < factor.size(); ++k) {
        factor[k] = (std::norm(a) - 1.0) * p;
        p *= std::conj(a);
      }
      std::vector<Complex> next(out.size(), Complex(0.0));
      for (size_t i = 0; i < out.size(); ++i) {
        if (out[i] == Complex(0.0)) continue;
        for (size_t j = 0; i + j < out.size(); ++j) next[i + j] += out[i] * factor[j];
      }
      out.swap(next);
    }
    return out;
  }

 private:
  Complex factor_{1.0};
  std::vector<Complex> zeros_;
};

inline Matrix blaschke_apply(const BlaschkeProduct& b, const Matrix& a) {
  require_contraction(a, "blaschke_apply");
  Matrix out = b.unimodular_factor() * identity(a.rows());
  for (const auto& z : b.zeros()) out = out * mobius(a, z);
  return out;
}

/// T_i = I (x) ... (x) A_i (x) ... (x) I on the tensor product of the factor spaces.
inline ContractionTuple tensor_tuple(const std::vector<Matrix>& factors) {
  if (factors.empty()) throw Error(Errc::InvalidArgument, "tensor_tuple needs at least one factor");
  for (const auto& f : factors) {
    require_contraction(f, "tensor_tuple");
    if (spectral_radius_estimate(f, kSpectralPower, 1.0 - kC00Margin) > 1.0 - kC00Margin)
      throw Error(Errc::NotContraction, "tensor_tuple factor is not certified C.0");
  }
  Index total = 1;
  for (const auto& f : factors) total *= f.rows();
  std::vector<Matrix> comps;
  for (size_t i = 0; i < factors.size(); ++i) {
    Index before = 1, after = 1;
    for (size_t j = 0; j < i; ++j) before *= factors[j].rows();
    for (size_t j = i + 1; j < factors.size(); ++j) after *= factors[j].rows();
    comps.push_back(kron(kron(identity(before), factors[i]), identity(after)));
  }
  return {total, std::move(comps)};
}

/// Block-diagonal direct sum of two tuples; the shorter one is padded with zeros.
inline ContractionTuple direct_sum(const ContractionTuple& a, const ContractionTuple& b) {
  const Index n = a.space_dim() + b.space_dim();
  const size_t len = std::max(a.size(), b.size());
  std::vector<Matrix> comps;
  for (size_t k = 0; k < len; ++k) {
    Matrix m = Matrix::Zero(n, n);
    if (k < a.size()) m.topLeftCorner(a.space_dim(), a.space_dim()) = a[k];
    if (k < b.size()) m.bottomRightCorner(b.space_dim(), b.space_dim()) = b[k];
    comps.push_back(std::move(m));
  }
  return {n, std::move(comps)};
}

}  // namespace dcmodel
