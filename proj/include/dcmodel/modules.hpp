#pragma once

// Submodules and quotient modules of the truncated scalar Hardy space:
// double commutation of restrictions and compressions, wandering-generator
// extraction, Jordan-block tensor quotients and the kernel mechanism behind
// quasi-Beurling diagonal symbols.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include "dcmodel/contraction.hpp"
#include "dcmodel/hardy.hpp"
#include "dcmodel/linops.hpp"

namespace dcmodel {

/// Truncated one-variable power series.
using Series = std::vector<Complex>;

inline Series series_mul(const Series& a, const Series& b, int degree) {
  Series out(static_cast<size_t>(degree + 1), Complex(0.0));
  for (size_t i = 0; i < a.size() && i < out.size(); ++i) {
    if (a[i] == Complex(0.0)) continue;
    for (size_t j = 0; j < b.size() && i + j < out.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

/// 1 / a, requires a[0] != 0.
inline Series series_inv(const Series& a, int degree) {
  if (a.empty() || a[0] == Complex(0.0)) throw Error(Errc::InvalidArgument, "series has no inverse");
  Series out(static_cast<size_t>(degree + 1), Complex(0.0));
  out[0] = 1.0 / a[0];
  for (size_t k = 1; k < out.size(); ++k) {
    Complex s(0.0);
    for (size_t j = 1; j <= k && j < a.size(); ++j) s += a[j] * out[k - j];
    out[k] = -s / a[0];
  }
  return out;
}

/// phi_mu composed with b: (mu - b) / (1 - conj(mu) b).
inline Series series_mobius(Complex mu, const Series& b, int degree) {
  Series num(static_cast<size_t>(degree + 1), Complex(0.0)), den = num;
  for (size_t k = 0; k < num.size() && k < b.size(); ++k) {
    num[k] = -b[k];
    den[k] = -std::conj(mu) * b[k];
  }
  num[0] += mu;
  den[0] += 1.0;
  return series_mul(num, series_inv(den, degree), degree);
}

/// sum_{k > m} |s_k|^2.
inline double series_tail_sq(const Series& s, int m) {
  double t = 0.0;
  for (size_t k = static_cast<size_t>(std::max(m + 1, 0)); k < s.size(); ++k) t += std::norm(s[k]);
  return t;
}

/// Orthonormal basis of H^2 minus eta H^2 for a finite Blaschke product eta:
/// e_j(z) = sqrt(1 - |a_j|^2) / (1 - conj(a_j) z) * prod_{i<j} -phi_{a_i}(z),
/// so that zeros at the origin give e_j = z^j.
inline std::vector<Series> takenaka_basis(const BlaschkeProduct& eta, int degree) {
  std::vector<Series> out;
  const auto& zeros = eta.zeros();
  for (size_t j = 0; j < zeros.size(); ++j) {
    const Complex a = zeros[j];
    Series kernel(static_cast<size_t>(degree + 1));
    Complex p(std::sqrt(1.0 - std::norm(a)));
    for (auto& c : kernel) {
      c = p;
      p *= std::conj(a);
    }
    const BlaschkeProduct head(Complex(1.0), std::vector<Complex>(zeros.begin(), zeros.begin() + static_cast<long>(j)));
    out.push_back(series_mul(kernel, head.series(degree), degree));
    if (j % 2 == 1)
      for (auto& c : out.back()) c = -c;
  }
  return out;
}

/// Compression of M_z to the model space in the Takenaka basis, computed from
/// series truncated at `degree`.
inline Matrix model_space_compression(const BlaschkeProduct& eta, int degree = 400) {
  const auto e = takenaka_basis(eta, degree);
  const Index m = static_cast<Index>(e.size());
  Matrix j(m, m);
  for (Index r = 0; r < m; ++r)
    for (Index c = 0; c < m; ++c) {
      Complex s(0.0);
      for (size_t k = 0; k + 1 < e[static_cast<size_t>(c)].size(); ++k)
        s += e[static_cast<size_t>(c)][k] * std::conj(e[static_cast<size_t>(r)][k + 1]);
      j(r, c) = s;
    }
  return j;
}

namespace detail {

/// Coefficients of prod_k f_k(zeta_{vars_k}) on the truncated basis (scalar).
inline Vector product_series(const HardyBasis& b, const std::vector<int>& vars, const std::vector<Series>& f) {
  Vector v = Vector::Zero(b.size());
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    Complex c(1.0);
    int used = 0;
    for (size_t i = 0; i < vars.size(); ++i) {
      const int p = b.exponent(mono, vars[i]);
      used += p;
      c *= static_cast<size_t>(p) < f[i].size() ? f[i][static_cast<size_t>(p)] : Complex(0.0);
    }
    if (used != b.degree(mono)) continue;
    v(mono) = c;
  }
  return v;
}

/// P_d (g * zeta^beta) for a scalar coefficient vector g.
inline Vector times_monomial(const HardyBasis& b, const Vector& g, const MultiIndex& beta) {
  Vector out = Vector::Zero(b.size());
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    if (g(mono) == Complex(0.0)) continue;
    const Index t = b.find(b.monomial(mono) + beta);
    if (t >= 0) out(t) += g(mono);
  }
  return out;
}

/// P_d f(M_{zeta_k}) X for a one-variable series f.
inline Matrix series_apply(const HardyBasis& b, int k, const Series& f, const Matrix& x) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  Matrix term = x;
  for (size_t j = 0; j < f.size() && j <= static_cast<size_t>(b.max_degree()); ++j) {
    if (j > 0) term = shift_apply(b, k, term);
    out += f[j] * term;
  }
  return out;
}

/// (P_d f(M_{zeta_k}) P_d)^* X.
inline Matrix series_adjoint_apply(const HardyBasis& b, int k, const Series& f, const Matrix& x) {
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  Matrix term = x;
  for (size_t j = 0; j < f.size() && j <= static_cast<size_t>(b.max_degree()); ++j) {
    if (j > 0) term = shift_adjoint_apply(b, k, term);
    out += std::conj(f[j]) * term;
  }
  return out;
}

inline void require_scalar(const HardyBasis& b) {
  if (b.coeff_dim() != 1) throw Error(Errc::InvalidArgument, "scalar coefficient space required");
}

/// Sixteen sample points with every coordinate on the circle of radius 1/2.
inline std::vector<KernelPoint> sample_grid(int num_vars) {
  std::vector<KernelPoint> grid;
  for (int j = 0; j < 16; ++j) {
    std::vector<Complex> c;
    for (int k = 0; k < num_vars; ++k) c.push_back(std::polar(0.5, 2.0 * std::numbers::pi * j * (2 * k + 1) / 16.0));
    grid.emplace_back(std::move(c));
  }
  return grid;
}

}  // namespace detail

/// One-variable Blaschke product placed in a given variable.
struct VariableBlaschke {
  int var = 0;
  BlaschkeProduct eta;
};

struct SubmoduleHandle {
  BasisPtr basis;
  Subspace space;  // span of P_d(g zeta^beta), |beta| <= cutoff
  Subspace core;   // same with |beta| <= cutoff - 1
  int cutoff = 0;
  double truncation_tail = 0.0;  // max ||(I - P_d) g zeta^beta|| over the spanning set
  std::optional<HardyVector> generator_hint;
  std::function<Complex(const KernelPoint&)> hint_eval;  // closed form of the hint
};

/// Submodule generated by scalar coefficient vectors, sectioned at `cutoff`.
inline SubmoduleHandle submodule_from_generators(const BasisPtr& basis, const std::vector<Vector>& gens, int cutoff,
                                                 double tail = 0.0) {
  const auto& b = *basis;
  detail::require_scalar(b);
  if (cutoff < 1) throw Error(Errc::UnsafeDegree, "submodule section needs cutoff >= 1");
  SubmoduleHandle s;
  s.basis = basis;
  s.cutoff = cutoff;
  s.truncation_tail = tail;
  const Index shifts = b.section_size(std::min(cutoff, b.max_degree()));
  const Index inner = b.section_size(cutoff - 1);
  Matrix all(b.size(), shifts * static_cast<Index>(gens.size()));
  Matrix low(b.size(), inner * static_cast<Index>(gens.size()));
  Index ca = 0, cl = 0;
  for (const auto& g : gens)
    for (Index mono = 0; mono < shifts; ++mono) {
      const Vector v = detail::times_monomial(b, g, b.monomial(mono));
      all.col(ca++) = v;
      if (mono < inner) low.col(cl++) = v;
    }
  s.space = orthonormalize(all, 1e-12);
  s.core = orthonormalize(low, 1e-12);
  return s;
}

/// Polynomial generators, sectioned at d - max generator degree.
inline SubmoduleHandle submodule_from_polynomials(const BasisPtr& basis, const std::vector<MatrixPolynomial>& gens) {
  std::vector<Vector> vecs;
  int top = 0;
  for (const auto& g : gens) {
    if (g.rows != 1 || g.cols != 1) throw Error(Errc::InvalidArgument, "scalar polynomial generators required");
    const HardyOperator m = mult_operator(g, basis);
    vecs.push_back(m.matrix().col(0));
    top = std::max(top, g.degree());
  }
  return submodule_from_generators(basis, vecs, basis->max_degree() - top);
}

/// S = Psi H^2 for a scalar polynomial symbol that is inner on the truncation.
inline SubmoduleHandle submodule_from_polynomial_symbol(const BasisPtr& basis, const MatrixPolynomial& symbol,
                                                        double tol = 1e-10) {
  const InnerReport inner = is_inner_on_truncation(mult_operator(symbol, basis), tol);
  if (!inner.pass) throw Error(Errc::NotInner, "symbol residual " + std::to_string(inner.residual));
  SubmoduleHandle s = submodule_from_polynomials(basis, {symbol});
  s.generator_hint = HardyVector(basis, mult_operator(symbol, basis).matrix().col(0));
  s.hint_eval = [symbol](const KernelPoint& l) { return symbol(l)(0, 0); };
  return s;
}

/// S = prod_k eta_k(zeta_{var_k}) H^2. The section cutoff is the largest c with
/// ||(I - P_{d-c}) eta|| <= tail_tol.
inline SubmoduleHandle submodule_from_inner(const BasisPtr& basis, const std::vector<VariableBlaschke>& factors,
                                            double tail_tol = 1e-6) {
  const auto& b = *basis;
  detail::require_scalar(b);
  const int d = b.max_degree();
  const int long_degree = d + 2000;
  std::vector<int> vars;
  std::vector<Series> full, sq;
  for (const auto& f : factors) {
    if (f.var < 0 || f.var >= b.num_vars()) throw Error(Errc::InvalidArgument, "Blaschke variable outside the basis");
    for (int v : vars)
      if (v == f.var) throw Error(Errc::InvalidArgument, "one Blaschke factor per variable");
    vars.push_back(f.var);
    full.push_back(f.eta.series(long_degree));
    Series s(full.back().size());
    for (size_t k = 0; k < s.size(); ++k) s[k] = std::norm(full.back()[k]);
    sq.push_back(s);
  }
  // Squared coefficient mass of the product by total degree.
  Series mass(1, Complex(1.0));
  for (const auto& s : sq) mass = series_mul(mass, s, long_degree);
  auto tail = [&](int m) {
    double t = 0.0;
    for (size_t k = static_cast<size_t>(m + 1); k < mass.size(); ++k) t += mass[k].real();
    return std::sqrt(std::max(0.0, t));
  };
  int c = d;
  while (c >= 1 && tail(d - c) > tail_tol) --c;
  if (c < 1) throw Error(Errc::UnsafeDegree, "generator tail exceeds tolerance at every cutoff");
  const Vector g = detail::product_series(b, vars, full);
  SubmoduleHandle s = submodule_from_generators(basis, {g}, c, tail(d - c));
  s.generator_hint = HardyVector(basis, g);
  s.hint_eval = [factors](const KernelPoint& l) {
    Complex v(1.0);
    for (const auto& f : factors) v *= f.eta(l[static_cast<size_t>(f.var)]);
    return v;
  };
  return s;
}

struct DoubleCommutationReport {
  double cross_commutator = 0.0;  // max_{j != k} ||[A_j^*, A_k]|| on the core
  double commutator = 0.0;        // max_{j != k} ||[A_j, A_k]|| on the core
  double invariance = 0.0;        // leakage of the core out of the space under the relevant action
  int cutoff = 0;
  bool pass = false;
};

namespace detail {

/// Commutator residuals of the matrices a_k restricted to the columns `core`.
inline void commutators(const std::vector<Matrix>& a, const Matrix& core, DoubleCommutationReport& r) {
  for (size_t j = 0; j < a.size(); ++j)
    for (size_t k = 0; k < a.size(); ++k) {
      if (j == k) continue;
      r.cross_commutator = std::max(r.cross_commutator, op_norm((a[j].adjoint() * a[k] - a[k] * a[j].adjoint()) * core));
      r.commutator = std::max(r.commutator, op_norm((a[j] * a[k] - a[k] * a[j]) * core));
    }
}

}  // namespace detail

/// R_k = M_{zeta_k}|_S in the orthonormal coordinates of the section.
inline DoubleCommutationReport restriction_double_commutation(const SubmoduleHandle& s, double tol) {
  const auto& b = *s.basis;
  const Matrix& y = s.space.basis;
  const Matrix& c = s.core.basis;
  if (c.cols() == 0) throw Error(Errc::UnsafeDegree, "empty core section");
  DoubleCommutationReport r;
  r.cutoff = s.cutoff;
  std::vector<Matrix> a;
  for (int k = 0; k < b.num_vars(); ++k) {
    a.push_back(y.adjoint() * shift_apply(b, k, y));
    const Matrix moved = shift_apply(b, k, c);
    r.invariance = std::max(r.invariance, op_norm(moved - y * (y.adjoint() * moved)));
  }
  detail::commutators(a, y.adjoint() * c, r);
  r.pass = r.cross_commutator <= tol && r.invariance <= tol;
  return r;
}

struct WanderingExtraction {
  Index dim = 0;
  Subspace wandering;  // S minus sum_k zeta_k S on the section
  std::optional<HardyVector> generator;
  Complex unimodular{1.0};
  double deviation = -1.0;  // max grid deviation from the hint, -1 without a hint
};

/// W = S minus the span of zeta_k S, with the generator matched against the hint.
inline WanderingExtraction wandering_generator_extract(const SubmoduleHandle& s, double rank_tol = 1e-6) {
  const auto& b = *s.basis;
  const Matrix& y = s.space.basis;
  const Matrix& c = s.core.basis;
  Matrix shifted(b.size(), c.cols() * b.num_vars());
  for (int k = 0; k < b.num_vars(); ++k) shifted.middleCols(k * c.cols(), c.cols()) = shift_apply(b, k, c);
  const Subspace coords = null_space((y.adjoint() * shifted).adjoint(), rank_tol);
  WanderingExtraction w;
  w.dim = coords.dim();
  w.wandering.ambient_dim = b.size();
  w.wandering.basis = y * coords.basis;
  if (w.dim > 1)
    throw Error(Errc::AmbiguousWandering, "wandering section has dimension " + std::to_string(w.dim));
  if (w.dim == 0) return w;
  HardyVector g(s.basis, w.wandering.basis.col(0));
  if (s.generator_hint && s.hint_eval) {
    const Vector& h = s.generator_hint->coeffs();
    Index top = 0;
    h.cwiseAbs().maxCoeff(&top);
    const Complex ratio = g.coeffs()(top) / h(top);
    w.unimodular = ratio / std::abs(ratio);
    const double scale = h.norm();
    w.deviation = 0.0;
    for (const auto& lambda : detail::sample_grid(b.num_vars()))
      w.deviation = std::max(w.deviation, std::abs(g.evaluate(lambda)(0) - w.unimodular * s.hint_eval(lambda) / scale));
  }
  w.generator = std::move(g);
  return w;
}

/// Distance between the section and the span of M^alpha w, |alpha| <= cutoff.
inline double beurling_regeneration_distance(const SubmoduleHandle& s, const Vector& w) {
  const auto& b = *s.basis;
  const Index count = b.section_size(std::min(s.cutoff, b.max_degree()));
  Matrix orbit(b.size(), count);
  orbit.col(0) = w;
  for (Index mono = 1; mono < count; ++mono) {
    int k = 0;
    while (b.exponent(mono, k) == 0) ++k;
    orbit.col(mono) = shift_apply(b, k, orbit.col(b.lower(k, mono)));
  }
  return subspace_distance(orthonormalize(orbit, 1e-12), s.space);
}

struct DegreeObstruction {
  int lowest_degree = -1;      // k0: lowest homogeneous degree present in S
  double mass_in_space = 0.0;  // ||P_{k0} S-section||
  double mass_in_shifts = 0.0;  // ||P_{k0} sum_k zeta_k S||
};

/// The lowest homogeneous degree of S is never reached by sum_k zeta_k S.
inline DegreeObstruction homogeneous_obstruction(const SubmoduleHandle& s, double tol = 1e-10) {
  const auto& b = *s.basis;
  const Matrix& y = s.space.basis;
  DegreeObstruction r;
  for (int t = 0; t <= b.max_degree() && r.lowest_degree < 0; ++t) {
    const Index lo = t == 0 ? 0 : b.section_size(t - 1), hi = b.section_size(t);
    const double m = op_norm(y.middleRows(lo, hi - lo));
    if (m > tol) {
      r.lowest_degree = t;
      r.mass_in_space = m;
      for (int k = 0; k < b.num_vars(); ++k)
        r.mass_in_shifts = std::max(r.mass_in_shifts, op_norm(shift_apply(b, k, s.core.basis).middleRows(lo, hi - lo)));
    }
  }
  return r;
}

struct QuotientHandle {
  BasisPtr basis;
  Matrix frame;                    // orthonormal columns spanning the section
  std::vector<Index> core;         // columns whose images stay inside the section
  std::vector<Matrix> compressions;  // frame^* P_d M_{zeta_k} frame
  int cutoff = 0;
  double truncation_tail = 0.0;
  std::vector<Index> factor_dims;  // Kronecker layout: Blaschke factors then the free variables
};

namespace detail {

inline void fill_compressions(QuotientHandle& q) {
  q.compressions.clear();
  for (int k = 0; k < q.basis->num_vars(); ++k) q.compressions.push_back(q.frame.adjoint() * shift_apply(*q.basis, k, q.frame));
}

}  // namespace detail

/// Tensor product of the model spaces of eta_k in variables 0..m-1 and of
/// the full Hardy space in the remaining variables, columns in Kronecker
/// order with the free monomials last.
inline QuotientHandle quotient_tensor_build(const BasisPtr& basis, const std::vector<BlaschkeProduct>& inner_list,
                                            double tail_tol = 1e-8) {
  const auto& b = *basis;
  detail::require_scalar(b);
  const int n = b.num_vars(), d = b.max_degree(), m = static_cast<int>(inner_list.size());
  if (m > n) throw Error(Errc::InvalidArgument, "more Blaschke factors than variables");
  int total = 0;
  for (const auto& eta : inner_list) {
    if (eta.degree() < 1) throw Error(Errc::InvalidArgument, "Blaschke factor of degree 0");
    total += eta.degree() - 1;
  }
  if (total > d) throw Error(Errc::DegreeOverflow, "model spaces do not fit below the truncation degree");

  const int long_degree = d + 2000;
  std::vector<std::vector<Series>> e;
  std::vector<std::vector<double>> tails;  // per factor: max_j tail_sq beyond degree s
  for (const auto& eta : inner_list) {
    e.push_back(takenaka_basis(eta, long_degree));
    std::vector<double> t(static_cast<size_t>(d + 1), 0.0);
    for (int s = 0; s <= d; ++s)
      for (const auto& f : e.back()) t[static_cast<size_t>(s)] = std::max(t[static_cast<size_t>(s)], series_tail_sq(f, s));
    tails.push_back(std::move(t));
  }
  // A product of unit vectors exceeding total degree t has some factor above floor(t / m).
  auto tail = [&](int t) {
    double s = 0.0;
    for (const auto& tl : tails) s += tl[static_cast<size_t>(m > 0 ? t / m : t)];
    return std::sqrt(s);
  };
  QuotientHandle q;
  q.basis = basis;
  const bool free_vars = m < n;
  int c = free_vars ? d : 0;
  if (free_vars) {
    while (c >= 1 && tail(d - c) > tail_tol) --c;
    if (c < 1) throw Error(Errc::UnsafeDegree, "model-space tails exceed tolerance at every cutoff");
  }
  q.cutoff = c;
  q.truncation_tail = tail(d - c);

  // Free monomials in variables m..n-1 of degree <= c, in basis order.
  std::vector<Index> free_monos;
  for (Index mono = 0; mono < b.num_monomials() && b.degree(mono) <= c; ++mono) {
    bool ok = true;
    for (int k = 0; k < m; ++k) ok = ok && b.exponent(mono, k) == 0;
    if (ok) free_monos.push_back(mono);
  }
  for (const auto& eta : inner_list) q.factor_dims.push_back(eta.degree());
  q.factor_dims.push_back(static_cast<Index>(free_monos.size()));

  Index cols = 1;
  for (Index f : q.factor_dims) cols *= f;
  q.frame = Matrix::Zero(b.size(), cols);
  std::vector<int> vars;
  for (int k = 0; k < m; ++k) vars.push_back(k);
  std::vector<size_t> pick(static_cast<size_t>(m), 0);
  for (Index col = 0; col < cols; ++col) {
    Index rest = col;
    const Index fm = free_monos[static_cast<size_t>(rest % q.factor_dims.back())];
    rest /= q.factor_dims.back();
    for (int k = m - 1; k >= 0; --k) {
      pick[static_cast<size_t>(k)] = static_cast<size_t>(rest % q.factor_dims[static_cast<size_t>(k)]);
      rest /= q.factor_dims[static_cast<size_t>(k)];
    }
    std::vector<Series> f;
    for (int k = 0; k < m; ++k) f.push_back(e[static_cast<size_t>(k)][pick[static_cast<size_t>(k)]]);
    const Vector blaschke_part = m > 0 ? detail::product_series(b, vars, f) : Vector(Vector::Unit(b.size(), 0));
    q.frame.col(col) = detail::times_monomial(b, blaschke_part, b.monomial(fm));
    if (b.degree(fm) <= c - 1 || !free_vars) q.core.push_back(col);
  }
  detail::fill_compressions(q);
  return q;
}

/// Quotient by the ideal generated by homogeneous polynomials; graded, so the
/// section is sum_t Hom_t minus (ideal)_t and is exact.
inline QuotientHandle quotient_from_homogeneous(const BasisPtr& basis, const std::vector<MatrixPolynomial>& gens) {
  const auto& b = *basis;
  detail::require_scalar(b);
  std::vector<Vector> g;
  std::vector<int> deg;
  for (const auto& p : gens) {
    if (p.rows != 1 || p.cols != 1) throw Error(Errc::InvalidArgument, "scalar polynomial generators required");
    int lo = -1, hi = -1;
    for (const auto& [alpha, c] : p.terms) {
      if (c.cwiseAbs().maxCoeff() == 0.0) continue;
      lo = lo < 0 ? alpha.degree() : std::min(lo, alpha.degree());
      hi = std::max(hi, alpha.degree());
    }
    if (lo != hi) throw Error(Errc::InvalidArgument, "generator is not homogeneous");
    g.push_back(mult_operator(p, basis).matrix().col(0));
    deg.push_back(hi);
  }
  QuotientHandle q;
  q.basis = basis;
  q.cutoff = b.max_degree() - 1;
  std::vector<Vector> cols;
  for (int t = 0; t <= b.max_degree(); ++t) {
    const Index lo = t == 0 ? 0 : b.section_size(t - 1), hi = b.section_size(t);
    std::vector<Vector> ideal;
    for (size_t i = 0; i < g.size(); ++i) {
      if (deg[i] > t) continue;
      const Index blo = deg[i] == t ? 0 : b.section_size(t - deg[i] - 1), bhi = b.section_size(t - deg[i]);
      for (Index mono = blo; mono < bhi; ++mono) ideal.push_back(detail::times_monomial(b, g[i], b.monomial(mono)).segment(lo, hi - lo));
    }
    Matrix span(hi - lo, static_cast<Index>(ideal.size()));
    for (size_t j = 0; j < ideal.size(); ++j) span.col(static_cast<Index>(j)) = ideal[j];
    const Subspace comp = ideal.empty() ? Subspace{hi - lo, identity(hi - lo)} : null_space(span.adjoint(), 1e-10);
    for (Index j = 0; j < comp.dim(); ++j) {
      Vector v = Vector::Zero(b.size());
      v.segment(lo, hi - lo) = comp.basis.col(j);
      if (t < b.max_degree()) q.core.push_back(static_cast<Index>(cols.size()));
      cols.push_back(v);
    }
  }
  q.frame = Matrix(b.size(), static_cast<Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) q.frame.col(static_cast<Index>(j)) = cols[j];
  q.factor_dims = {q.frame.cols()};
  detail::fill_compressions(q);
  return q;
}

/// Commutator residuals of the stored compressions on the core columns; the
/// invariance entry measures how far M_{zeta_k}^* moves the section off itself.
inline DoubleCommutationReport compression_double_commutation(const QuotientHandle& q, double tol) {
  if (q.core.empty()) throw Error(Errc::UnsafeDegree, "empty core section");
  const auto& b = *q.basis;
  DoubleCommutationReport r;
  r.cutoff = q.cutoff;
  Matrix core = Matrix::Zero(q.frame.cols(), static_cast<Index>(q.core.size()));
  for (size_t j = 0; j < q.core.size(); ++j) core(q.core[j], static_cast<Index>(j)) = 1.0;
  detail::commutators(q.compressions, core, r);
  for (int k = 0; k < b.num_vars(); ++k) {
    const Matrix moved = shift_adjoint_apply(b, k, q.frame);
    r.invariance = std::max(r.invariance, op_norm(moved - q.frame * (q.frame.adjoint() * moved)));
  }
  r.pass = r.cross_commutator <= tol && r.commutator <= tol;
  return r;
}

/// I_{before} (x) J (x) I_{after} for the compression in Blaschke variable k.
inline Matrix expected_tensor_compression(const QuotientHandle& q, size_t k, const Matrix& j) {
  Index before = 1, after = 1;
  for (size_t i = 0; i < k; ++i) before *= q.factor_dims[i];
  for (size_t i = k + 1; i < q.factor_dims.size(); ++i) after *= q.factor_dims[i];
  return kron(kron(identity(before), j), identity(after));
}

struct ProductFormula {
  HardyVector formula;
  HardyVector direct;
  double distance = 0.0;
};

/// P_Q zeta^alpha for the tensor quotient of `inner_list` two ways: through the
/// orthonormal model-space bases, and as prod_i (I - M_{eta_i} M_{eta_i}^*) zeta^alpha.
inline ProductFormula projector_product_formula(const BasisPtr& basis, const std::vector<BlaschkeProduct>& inner_list,
                                                const MultiIndex& alpha) {
  const auto& b = *basis;
  detail::require_scalar(b);
  if (alpha.support_size() > static_cast<size_t>(b.num_vars()))
    throw Error(Errc::InvalidArgument, "multi-index uses variables beyond the basis");
  if (alpha.degree() > b.max_degree()) throw Error(Errc::DegreeOverflow, "monomial beyond the truncation");
  if (inner_list.size() > static_cast<size_t>(b.num_vars()))
    throw Error(Errc::InvalidArgument, "more Blaschke factors than variables");
  const int d = b.max_degree();
  std::vector<int> vars;
  std::vector<Series> f;
  for (int k = 0; k < b.num_vars(); ++k) {
    vars.push_back(k);
    const int a = alpha[static_cast<size_t>(k)];
    Series s(static_cast<size_t>(d + 1), Complex(0.0));
    if (static_cast<size_t>(k) < inner_list.size()) {
      for (const auto& ej : takenaka_basis(inner_list[static_cast<size_t>(k)], d))
        for (size_t i = 0; i < s.size(); ++i) s[i] += std::conj(ej[static_cast<size_t>(a)]) * ej[i];
    } else {
      s[static_cast<size_t>(a)] = 1.0;
    }
    f.push_back(std::move(s));
  }
  // Every factor acts on its own variable, so the direct side is the product
  // of one-variable projections z^a - eta (eta^* z^a), computed without truncation.
  std::vector<Series> g;
  for (int k = 0; k < b.num_vars(); ++k) {
    const int a = alpha[static_cast<size_t>(k)];
    Series s(static_cast<size_t>(d + 1), Complex(0.0));
    s[static_cast<size_t>(a)] = 1.0;
    if (static_cast<size_t>(k) < inner_list.size()) {
      const Series eta = inner_list[static_cast<size_t>(k)].series(d + a);
      Series lowered(static_cast<size_t>(a + 1), Complex(0.0));
      for (int j = 0; j <= a; ++j) lowered[static_cast<size_t>(a - j)] = std::conj(eta[static_cast<size_t>(j)]);
      const Series back = series_mul(eta, lowered, d);
      for (size_t i = 0; i < s.size(); ++i) s[i] -= back[i];
    }
    g.push_back(std::move(s));
  }
  ProductFormula r{HardyVector(basis, detail::product_series(b, vars, f)),
                   HardyVector(basis, detail::product_series(b, vars, g)), 0.0};
  r.distance = (r.formula - r.direct).norm();
  return r;
}

struct KernelMechanism {
  std::vector<Complex> mu;  // mu_k = f_k(lambda_k)
  double residual = 0.0;    // ||prod_k (I - W_k W_k^*) K_lambda - K_lambda||
  double tail_bound = 0.0;
  bool pass = false;
};

/// With W_k = phi_{mu_k}(f_k)(M_{zeta_k}) and mu_k = f_k(lambda_k), every W_k^*
/// kills K_lambda, so the joint defect projection fixes it.
inline KernelMechanism prop36_kernel_check(const BasisPtr& basis, const std::vector<BlaschkeProduct>& symbols,
                                           const KernelPoint& lambda) {
  const auto& b = *basis;
  detail::require_scalar(b);
  if (symbols.size() > static_cast<size_t>(b.num_vars()) || lambda.size() > static_cast<size_t>(b.num_vars()))
    throw Error(Errc::InvalidArgument, "symbols or point beyond the materialized variables");
  const int d = b.max_degree();
  KernelMechanism r;
  const Vector k0 = kernel_vector(lambda, basis).coeffs();
  Matrix y = k0;
  for (size_t k = 0; k < symbols.size(); ++k) {
    const Complex mu = symbols[k](lambda[k]);
    r.mu.push_back(mu);
    const Series w = series_mobius(mu, symbols[k].series(d), d);
    const int var = static_cast<int>(k);
    y -= detail::series_apply(b, var, w, detail::series_adjoint_apply(b, var, w, y));
  }
  r.residual = (y.col(0) - k0).norm();
  const double t = std::sqrt(kernel_tail_sq(lambda, d));
  r.tail_bound = (std::ldexp(1.0, static_cast<int>(symbols.size())) - 1.0) * t + 1e-13 * k0.norm();
  r.pass = r.residual <= r.tail_bound;
  return r;
}

/// ||prod_{k<n}(I - V_k V_k^*) x|| for the isometry family on the first n variables.
inline double theorem15_joint_defect(const BasisPtr& basis, int n, const HardyVector& x) {
  HardyVector y = x;
  for (int k = 0; k < n; ++k) {
    const HardyOperator v = theorem15_operator(k, basis);
    y = y - v.apply_checked(v.adjoint().apply_checked(y));
  }
  return y.norm();
}

}  // namespace dcmodel
