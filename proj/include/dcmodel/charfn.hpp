#pragma once

// Characteristic functions of single C.0 contractions and the quotient-module
// description of the canonical model through them.

#include <cmath>
#include <numbers>
#include <vector>

#include "dcmodel/contraction.hpp"
#include "dcmodel/dilation.hpp"
#include "dcmodel/hardy.hpp"
#include "dcmodel/linops.hpp"

namespace dcmodel {

inline constexpr double kDefectRankTol = 1e-10;

/// theta_T(z) = [-T + z D_{T*}(I - zT*)^{-1} D_T] restricted to the defect spaces.
struct CharFn {
  Matrix t;
  Matrix defect;       // D_T
  Matrix defect_star;  // D_{T*}
  Subspace defect_in;   // range of D_T
  Subspace defect_out;  // range of D_{T*}
  double rank_tol = kDefectRankTol;

  Index in_dim() const { return defect_in.dim(); }
  Index out_dim() const { return defect_out.dim(); }
};

inline CharFn charfn_build(const Matrix& t, double rank_tol = kDefectRankTol) {
  require_contraction(t, "charfn_build");
  CharFn f;
  f.t = t;
  f.rank_tol = rank_tol;
  f.defect = defect(t);
  f.defect_star = defect(t.adjoint());
  f.defect_in = orthonormalize(f.defect, rank_tol);
  f.defect_out = orthonormalize(f.defect_star, rank_tol);
  return f;
}

inline Matrix charfn_eval(const CharFn& f, Complex z) {
  const Matrix& q_in = f.defect_in.basis;
  const Matrix& q_out = f.defect_out.basis;
  const Matrix full = -f.t + z * f.defect_star * solve_shifted(f.t.adjoint(), z) * f.defect;
  return q_out.adjoint() * full * q_in;
}

/// ||(I - theta(b) theta(a)*) - (1 - conj(a) b) D_{T*}(I - bT*)^{-1}(I - conj(a) T)^{-1} D_{T*}|| on the defect space of T*.
inline double charfn_identity_check(const CharFn& f, Complex a, Complex b) {
  const Matrix& q = f.defect_out.basis;
  const Index e = f.out_dim();
  const Matrix lhs = identity(e) - charfn_eval(f, b) * charfn_eval(f, a).adjoint();
  const Matrix kernel = f.defect_star * solve_shifted(f.t.adjoint(), b) * solve_shifted(f.t, std::conj(a)) * f.defect_star;
  const Matrix rhs = (1.0 - std::conj(a) * b) * (q.adjoint() * kernel * q);
  return e == 0 ? 0.0 : op_norm(lhs - rhs);
}

/// max_k ||theta(z_k)* theta(z_k) - I|| over `samples` equispaced points of the unit circle.
inline double boundary_unitarity_check(const CharFn& f, int samples) {
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * k / samples);
    const Matrix th = charfn_eval(f, z);
    if (th.size() == 0) continue;
    worst = std::max(worst, op_norm(th.adjoint() * th - identity(f.in_dim())));
  }
  return worst;
}

struct CharPolynomial {
  std::vector<Matrix> coeffs;  // C_0 = -T, C_k = D_{T*} T*^{k-1} D_T, in defect coordinates
  double tail_bound = 0.0;     // sup_{|z|<=1} ||theta(z) - sum_k C_k z^k||

  int degree() const { return static_cast<int>(coeffs.size()) - 1; }
  Matrix operator()(Complex z) const {
    Matrix out = coeffs.back();
    for (size_t k = coeffs.size() - 1; k-- > 0;) out = (z * out + coeffs[k]).eval();
    return out;
  }
};

/// Taylor polynomial of theta with the smallest degree >= 1 whose certified tail is below tol.
inline CharPolynomial charfn_poly_truncate(const CharFn& f, double tol, int max_degree = 10000) {
  if (spectral_radius_estimate(f.t, kSpectralPower, 1.0 - kC00Margin) > 1.0 - kC00Margin)
    throw Error(Errc::NotContraction, "spectral radius not certified below 1");
  const Matrix& q_in = f.defect_in.basis;
  const Matrix& q_out = f.defect_out.basis;
  const DecayProfile p = decay_profile(ContractionTuple({f.t}));
  const double scale = op_norm(f.defect) * op_norm(f.defect_star) * p.constant[0];
  const double rate = p.rate[0];
  // sum_{k > d} ||C_k|| <= ||D_T|| ||D_{T*}|| sum_{j >= d} ||T*^j||.
  auto tail = [&](int d) {
    if (p.vanish[0] > 0 && d >= p.vanish[0]) return 0.0;
    return scale * std::pow(rate, d) / (1.0 - rate);
  };
  int d = 1;
  while (tail(d) >= tol) {
    if (++d > max_degree) throw Error(Errc::InvalidArgument, "characteristic function tail does not reach tolerance");
  }
  CharPolynomial out;
  out.coeffs.push_back(q_out.adjoint() * (-f.t) * q_in);
  Matrix left = q_out.adjoint() * f.defect_star;
  const Matrix right = f.defect * q_in;
  for (int k = 1; k <= d; ++k) {
    out.coeffs.push_back(left * right);
    left = left * f.t.adjoint();
  }
  out.tail_bound = tail(d);
  return out;
}

namespace detail {

/// Exact columns of `op`.
inline Matrix exact_column_block(const HardyOperator& op) {
  const auto cols = op.exact_columns();
  Matrix m(op.matrix().rows(), static_cast<Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) m.col(static_cast<Index>(j)) = op.matrix().col(cols[j]);
  return m;
}

/// ||(A - B) restricted to the first `cols` coordinates||.
inline double section_gap(const Matrix& a, const Matrix& b, Index cols) {
  return op_norm(a.leftCols(cols) - b.leftCols(cols));
}

}  // namespace detail

struct ProjectionIdentity {
  double residual = 0.0;
  int safe_cutoff = -1;
  int symbol_degree = 0;
  double symbol_tail = 0.0;
};

/// ||U U* - (I - M_theta M_theta*)|| on inputs of degree <= d - deg(theta), single contraction.
inline ProjectionIdentity projection_identity_check(const Matrix& t, int d, double tol) {
  const CharFn f = charfn_build(t);
  const CharPolynomial poly = charfn_poly_truncate(f, tol / 10.0);
  const DilationModel model = canonical_embedding(ContractionTuple({t}), d);
  ProjectionIdentity r;
  r.symbol_degree = poly.degree();
  r.symbol_tail = poly.tail_bound;
  r.safe_cutoff = d - poly.degree();
  if (r.safe_cutoff < 0) throw Error(Errc::UnsafeDegree, "truncation degree below the symbol degree");
  const Matrix g = model.defect_basis.basis.adjoint() * f.defect_out.basis;
  std::vector<Matrix> coeffs;
  for (const auto& c : poly.coeffs) coeffs.push_back(g * c);
  const auto in = enumerate_basis(1, d, static_cast<int>(f.in_dim()));
  const HardyOperator m = one_variable_symbol(0, coeffs, in);
  const Matrix& u = model.embedding;
  const Index n = u.rows();
  const Matrix lhs = u * u.adjoint();
  const Matrix rhs = identity(n) - m.matrix() * m.matrix().adjoint();
  r.residual = detail::section_gap(lhs, rhs, model.basis->section_size(r.safe_cutoff));
  return r;
}

struct QuotientModelReport {
  double distance = 0.0;  // ||(P_{Q-perp} - P_R) on the safe section||
  int safe_cutoff = -1;
  int max_symbol_degree = 0;
  double symbol_tail = 0.0;  // sum of the per-component polynomial tails
  Index complement_dim = 0;
  Index model_dim = 0;
  bool pass = false;
};

/// Compares the orthocomplement of the model space Q = ran U with the join of
/// the ranges of M_{theta_n(zeta_n)}, each symbol pulled back to the defect
/// space of the whole tuple.
inline QuotientModelReport quotient_model_check(const ContractionTuple& t, int d, double tol) {
  const DilationModel model = canonical_embedding(t, d);
  const auto& b = *model.basis;
  const Matrix& q = model.defect_basis.basis;
  QuotientModelReport r;
  std::vector<Matrix> ranges;
  for (size_t k = 0; k < t.size(); ++k) {
    const CharFn f = charfn_build(t[k]);
    if (f.in_dim() == 0) continue;
    const CharPolynomial poly = charfn_poly_truncate(f, tol / 10.0);
    r.max_symbol_degree = std::max(r.max_symbol_degree, poly.degree());
    r.symbol_tail += poly.tail_bound;
    const Matrix g = q.adjoint() * f.defect_out.basis;
    std::vector<Matrix> coeffs;
    for (const auto& c : poly.coeffs) coeffs.push_back(g * c);
    if (poly.degree() > d) throw Error(Errc::UnsafeDegree, "truncation degree below the symbol degree");
    const auto in = enumerate_basis(b.num_vars(), d, static_cast<int>(f.in_dim()));
    ranges.push_back(detail::exact_column_block(one_variable_symbol(static_cast<int>(k), coeffs, in)));
  }
  r.safe_cutoff = d - r.max_symbol_degree - 1;
  if (r.safe_cutoff < 0) throw Error(Errc::UnsafeDegree, "no safe section below the symbol degree");

  Index cols = 0;
  for (const auto& m : ranges) cols += m.cols();
  Matrix joined(b.size(), cols);
  Index at = 0;
  for (const auto& m : ranges) {
    joined.middleCols(at, m.cols()) = m;
    at += m.cols();
  }
  const Subspace rspace = orthonormalize(joined, 1e-10);
  const Subspace qspace = orthonormalize(model.embedding, 1e-10);
  r.complement_dim = rspace.dim();
  r.model_dim = qspace.dim();

  const Index sec = b.section_size(r.safe_cutoff);
  const Matrix id = identity(b.size()).leftCols(sec);
  const Matrix perp = id - qspace.basis * (qspace.basis.adjoint() * id);
  const Matrix pr = rspace.basis * (rspace.basis.adjoint() * id);
  r.distance = op_norm(perp - pr);
  r.pass = r.distance <= tol;
  return r;
}

}  // namespace dcmodel
