#pragma once

// Canonical isometric dilation of a finite doubly commuting tuple onto a
// truncated vector-valued Hardy space, its verification, the norm identity,
// defect-span completeness, the equivalence pseudometric and the power
// search that makes a pure tuple almost wandering on given probes.

#include <algorithm>
#include <cmath>
#include <vector>

#include "dcmodel/contraction.hpp"
#include "dcmodel/hardy.hpp"
#include "dcmodel/linops.hpp"

namespace dcmodel {

/// Componentwise bound ||T_i^j|| <= constant_i * rate_i^j; vanish_i > 0 records T_i^{vanish_i} = 0.
struct DecayProfile {
  std::vector<double> rate;
  std::vector<double> constant;
  std::vector<int> vanish;
};

inline DecayProfile decay_profile(const ContractionTuple& t) {
  DecayProfile p;
  for (const auto& a : t.components()) {
    const double c = op_norm(a);
    if (c == 0.0) {
      p.rate.push_back(0.0);
      p.constant.push_back(1.0);
      p.vanish.push_back(1);
      continue;
    }
    if (c <= 0.99) {
      p.rate.push_back(c);
      p.constant.push_back(1.0);
      p.vanish.push_back(0);
      continue;
    }
    // ||A^j|| <= C * 0.5^{floor(j / k)} once ||A^k|| <= 1/2, with C = max_{l<k} ||A^l||.
    Matrix power = a;
    double big = 1.0;
    int k = 1;
    double nk = c;
    while (nk > 0.5) {
      if (k >= 100000) throw Error(Errc::NotContraction, "no decay certificate within 100000 powers");
      big = std::max(big, nk);
      power = power * a;
      ++k;
      nk = op_norm(power);
    }
    p.rate.push_back(std::pow(0.5, 1.0 / k));
    p.constant.push_back(2.0 * big);
    p.vanish.push_back(nk == 0.0 ? k : 0);
  }
  return p;
}

/// Certified bound on sum_{|alpha| > d} ||D_{T*} T*^alpha x||^2 / ||x||^2.
inline double norm_tail_bound(const ContractionTuple& t, int d, const DecayProfile& p) {
  if (t.size() == 0) return 0.0;
  int exact_from = 0;
  for (int v : p.vanish) exact_from = (v > 0 && exact_from >= 0) ? exact_from + v - 1 : -1;
  if (exact_from >= 0 && d >= exact_from) return 0.0;
  const double dn = op_norm(joint_defect(t.adjoint()));
  std::vector<double> r2;
  double scale = dn * dn, full = 1.0;
  for (size_t i = 0; i < p.rate.size(); ++i) {
    r2.push_back(p.rate[i] * p.rate[i]);
    scale *= p.constant[i] * p.constant[i];
    full /= 1.0 - r2.back();
  }
  const auto h = complete_homogeneous(r2, d);
  double head = 0.0;
  for (double v : h) head += v;
  return scale * (std::max(0.0, full - head) + 4e-16 * full);
}

inline double norm_tail_bound(const ContractionTuple& t, int d) { return norm_tail_bound(t, d, decay_profile(t)); }

/// Smallest d whose certified relative tail is at most tau.
inline int select_truncation_degree(const ContractionTuple& t, double tau, int max_degree = 400) {
  const DecayProfile p = decay_profile(t);
  for (int d = 0; d <= max_degree; ++d)
    if (norm_tail_bound(t, d, p) <= tau) return d;
  throw Error(Errc::InvalidArgument, "tail tolerance not reachable below degree " + std::to_string(max_degree));
}

struct DilationModel {
  ContractionTuple tuple;
  BasisPtr basis;        // n = tuple size, coefficient dim = dim of the defect space of T*
  Subspace defect_basis;  // orthonormal basis Q of that defect space inside H
  Matrix defect_star;    // D_{T*}
  Matrix embedding;      // U: H -> truncated Hardy space
  int truncation_degree = 0;

  /// ||x||^2 - ||U x||^2.
  double tail_bound(const Vector& x) const { return std::max(0.0, x.squaredNorm() - (embedding * x).squaredNorm()); }
};

namespace detail {

/// First variable with a positive exponent, or -1 for the constant monomial.
inline int first_var(const HardyBasis& b, Index mono) {
  for (int k = 0; k < b.num_vars(); ++k)
    if (b.exponent(mono, k) > 0) return k;
  return -1;
}

/// Blocks B_alpha = B_0 T*^alpha for every monomial of `b`, built from parents.
inline std::vector<Matrix> adjoint_orbit(const HardyBasis& b, const ContractionTuple& t, const Matrix& start) {
  std::vector<Matrix> out(static_cast<size_t>(b.num_monomials()));
  out[0] = start;
  for (Index m = 1; m < b.num_monomials(); ++m) {
    const int k = first_var(b, m);
    out[static_cast<size_t>(m)] = out[static_cast<size_t>(b.lower(k, m))] * t[static_cast<size_t>(k)].adjoint();
  }
  return out;
}

inline BasisPtr tuple_basis(const ContractionTuple& t, int d, int e) {
  return enumerate_basis(std::max<int>(1, static_cast<int>(t.size())), d, e);
}

}  // namespace detail

/// x -> sum_alpha zeta^alpha (x) Q* D_{T*} T*^alpha x, truncated at degree d.
inline DilationModel canonical_embedding(const ContractionTuple& t, int d, double rank_tol = 1e-10) {
  if (t.size() == 0) throw Error(Errc::InvalidArgument, "canonical_embedding needs at least one component");
  DilationModel m;
  m.tuple = t;
  m.truncation_degree = d;
  m.defect_star = joint_defect(t.adjoint());
  m.defect_basis = orthonormalize(m.defect_star, rank_tol);
  if (m.defect_basis.dim() == 0) throw Error(Errc::ZeroDefect, "defect space of T* is zero");
  const int e = static_cast<int>(m.defect_basis.dim());
  m.basis = detail::tuple_basis(t, d, e);
  const auto z = detail::adjoint_orbit(*m.basis, t, m.defect_basis.basis.adjoint() * m.defect_star);
  m.embedding = Matrix(m.basis->size(), t.space_dim());
  for (Index mono = 0; mono < m.basis->num_monomials(); ++mono)
    m.embedding.middleRows(mono * e, e) = z[static_cast<size_t>(mono)];
  return m;
}

struct NormIdentity {
  double partial_sum = 0.0;
  double residual = 0.0;  // ||x||^2 - partial_sum
};

/// sum_{|alpha| <= d} ||D_{T*} T*^alpha x||^2 against ||x||^2.
inline NormIdentity norm_identity_check(const ContractionTuple& t, const Vector& x, int d) {
  if (x.size() != t.space_dim()) throw Error(Errc::DimensionMismatch, "probe has wrong dimension");
  NormIdentity r;
  if (t.size() == 0) {
    r.partial_sum = x.squaredNorm();
    return r;
  }
  const Matrix dstar = joint_defect(t.adjoint());
  const auto b = detail::tuple_basis(t, d, 1);
  std::vector<Vector> orbit(static_cast<size_t>(b->num_monomials()));
  orbit[0] = x;
  r.partial_sum = (dstar * x).squaredNorm();
  for (Index m = 1; m < b->num_monomials(); ++m) {
    const int k = detail::first_var(*b, m);
    orbit[static_cast<size_t>(m)] = t[static_cast<size_t>(k)].adjoint() * orbit[static_cast<size_t>(b->lower(k, m))];
    r.partial_sum += (dstar * orbit[static_cast<size_t>(m)]).squaredNorm();
  }
  r.residual = x.squaredNorm() - r.partial_sum;
  return r;
}

struct DilationReport {
  double dilation_residual = 0.0;    // P_H M^alpha|_H against T^alpha G_{d-|alpha|}
  double regularity_residual = 0.0;  // P_H M*^alpha M^beta|_H against T^beta G T*^alpha
  double dilation_raw = 0.0;         // same, against T^alpha
  double regularity_raw = 0.0;       // same, against T*^alpha T^beta
  double truncation_tail = 0.0;      // ||I - G_{d - order_cap}||
  double certified_tail = 0.0;       // analytic bound on the same quantity
  Index minimality_rank = 0;         // truncated proxy
  Index minimality_target = 0;
  int minimality_cutoff = 0;
  int safe_cutoff = 0;
  bool pass = false;
};

/// Checks the dilation and regularity identities through the embedding for all
/// disjointly supported alpha, beta with |alpha| + |beta| <= order_cap.
/// Truncation enters only through G_k = sum_{|nu|<=k} T^nu D_{T*}^2 T*^nu, which
/// is reported next to its certified distance from I.
inline DilationReport verify_dilation(const DilationModel& model, int order_cap, double tol) {
  const int d = model.truncation_degree;
  if (order_cap > d || order_cap < 0)
    throw Error(Errc::UnsafeDegree, "order cap " + std::to_string(order_cap) + " exceeds truncation degree " +
                                        std::to_string(d));
  const auto& b = *model.basis;
  const auto& t = model.tuple;
  const Index hdim = t.space_dim();
  const int e = b.coeff_dim();
  DilationReport r;
  r.safe_cutoff = d - order_cap;

  const auto w = detail::adjoint_orbit(b, t, model.defect_star);
  std::vector<Matrix> g(static_cast<size_t>(d + 1), Matrix::Zero(hdim, hdim));
  for (Index m = 0; m < b.num_monomials(); ++m) g[static_cast<size_t>(b.degree(m))] += w[static_cast<size_t>(m)].adjoint() * w[static_cast<size_t>(m)];
  for (int k = 1; k <= d; ++k) g[static_cast<size_t>(k)] += g[static_cast<size_t>(k - 1)];
  r.truncation_tail = op_norm(identity(hdim) - g[static_cast<size_t>(d - order_cap)]);
  r.certified_tail = norm_tail_bound(t, d - order_cap);

  auto z = [&](Index mono) { return model.embedding.middleRows(mono * e, e); };
  auto power = [&](const MultiIndex& a) { return t.power(a.exponents()); };
  const Index top = b.section_size(order_cap) / e;
  for (Index ia = 0; ia < top; ++ia) {
    const MultiIndex alpha = b.monomial(ia);
    for (Index ib = 0; ib < top; ++ib) {
      const MultiIndex beta = b.monomial(ib);
      if (alpha.degree() + beta.degree() > order_cap) continue;
      bool disjoint = true;
      for (int k = 0; k < b.num_vars(); ++k)
        if (alpha[static_cast<size_t>(k)] > 0 && beta[static_cast<size_t>(k)] > 0) disjoint = false;
      if (!disjoint) continue;
      const int rest = d - alpha.degree() - beta.degree();
      Matrix s = Matrix::Zero(hdim, hdim);
      for (Index nu = 0; nu < b.section_size(rest) / e; ++nu) {
        const MultiIndex mu = b.monomial(nu);
        s += z(b.find(beta + mu)).adjoint() * z(b.find(alpha + mu));
      }
      const Matrix ta_star = power(alpha).adjoint();
      const Matrix tb = power(beta);
      const double comp = op_norm(s - tb * g[static_cast<size_t>(rest)] * ta_star);
      const double raw = op_norm(s - ta_star * tb);
      r.regularity_residual = std::max(r.regularity_residual, comp);
      r.regularity_raw = std::max(r.regularity_raw, raw);
      if (alpha.degree() == 0) {
        r.dilation_residual = std::max(r.dilation_residual, comp);
        r.dilation_raw = std::max(r.dilation_raw, raw);
      }
    }
  }

  // Span of P_c M^alpha U H for |alpha| <= c must fill the section P_c.
  int c = std::min(d, 3);
  while (c > 0 && (b.section_size(c) > 1500 || (b.section_size(c) / e) * hdim > 4000)) --c;
  r.minimality_cutoff = c;
  const Index rows = b.section_size(c), shifts = rows / e;
  Matrix span = Matrix::Zero(rows, shifts * hdim);
  for (Index ia = 0; ia < shifts; ++ia) {
    const MultiIndex alpha = b.monomial(ia);
    for (Index mu = 0; mu < shifts; ++mu) {
      const Index target = b.find(alpha + b.monomial(mu));
      if (target < 0 || target >= shifts) continue;
      span.block(target * e, ia * hdim, e, hdim) = z(mu);
    }
  }
  r.minimality_target = rows;
  r.minimality_rank = numerical_rank(span, 1e-9);

  r.pass = r.dilation_residual <= tol && r.regularity_residual <= tol &&
           r.regularity_raw <= r.certified_tail + tol && r.minimality_rank == r.minimality_target;
  return r;
}

struct DefectTransfer {
  double direct = 0.0;   // ||D_{Phi_lambda(T)*} x||
  double dilated = 0.0;  // ||D_{Phi_lambda(M)*} U x|| on the truncation
  double difference = 0.0;
  double tail_bound = 0.0;
  bool pass = false;
};

/// Compares the defect norm of the Moebius-transformed tuple with the same
/// quantity for the Moebius-transformed shifts, evaluated on U x.
inline DefectTransfer defect_transfer_check(const DilationModel& model, const MoebiusPoint& lambda, const Vector& x) {
  const auto& b = *model.basis;
  DefectTransfer r;
  r.direct = (joint_defect(mobius_tuple(model.tuple, lambda).adjoint()) * x).norm();

  Matrix v = model.embedding * x;
  const double start_gap = std::sqrt(model.tail_bound(x));
  double overflow = 0.0;
  for (int k = 0; k < b.num_vars(); ++k) {
    const Complex a = lambda[static_cast<size_t>(k)];
    const Matrix y = mobius_shift_adjoint_apply(b, k, a, v);
    const Matrix wy = mobius_shift_apply(b, k, a, y);
    // W is an isometry, so the part of W W* v pushed past degree d has norm^2 ||W* v||^2 - ||P_d W W* v||^2.
    overflow += std::sqrt(std::max(0.0, y.squaredNorm() - wy.squaredNorm())) + 1e-7 * v.norm();
    v -= wy;
  }
  double outside = 1.0;  // variables past the model act on functions that do not depend on them
  for (size_t k = static_cast<size_t>(b.num_vars()); k < lambda.size(); ++k) outside *= std::sqrt(1.0 - std::norm(lambda[k]));
  r.dilated = outside * v.norm();
  r.difference = std::abs(r.direct - r.dilated);
  r.tail_bound = outside * (start_gap + overflow) + 1e-12;
  r.pass = r.difference <= r.tail_bound;
  return r;
}

struct SpanCompleteness {
  Index rank = 0;
  bool complete = false;
};

/// Rank of the span of the ranges of D_{Phi_lambda(T)*} over the grid.
inline SpanCompleteness defect_span_completeness(const ContractionTuple& t, const std::vector<MoebiusPoint>& grid,
                                                 double rank_tol = 1e-10) {
  const Index n = t.space_dim();
  Matrix acc(n, 0);
  SpanCompleteness r;
  for (const auto& lambda : grid) {
    const Matrix dm = joint_defect(mobius_tuple(t, lambda).adjoint());
    Matrix joined(n, acc.cols() + n);
    joined << acc, dm;
    acc = orthonormalize(joined, rank_tol).basis;
    if (acc.cols() == n) break;
  }
  r.rank = acc.cols();
  r.complete = r.rank == n;
  return r;
}

/// Fixed grid: every coordinate ranges over {0, 0.45, -0.45, 0.9i, -0.9i},
/// enumerated lexicographically with the last coordinate fastest.
inline std::vector<MoebiusPoint> deterministic_grid(int num_coords, int count = 25) {
  static const Complex values[] = {0.0, 0.45, -0.45, Complex(0.0, 0.9), Complex(0.0, -0.9)};
  std::vector<MoebiusPoint> grid;
  std::vector<int> digit(static_cast<size_t>(num_coords), 0);
  while (static_cast<int>(grid.size()) < count) {
    std::vector<Complex> c;
    for (int v : digit) c.push_back(values[v]);
    grid.emplace_back(std::move(c));
    int pos = num_coords - 1;
    while (pos >= 0 && ++digit[static_cast<size_t>(pos)] == 5) digit[static_cast<size_t>(pos--)] = 0;
    if (pos < 0) break;
  }
  return grid;
}

/// sum_n |(lambda_n - mu_n) / (1 - conj(lambda_n) mu_n)|^2.
inline double equivalence_pseudometric(const MoebiusPoint& lambda, const MoebiusPoint& mu) {
  double s = 0.0;
  for (size_t k = 0; k < std::max(lambda.size(), mu.size()); ++k) s += std::norm(mobius_scalar(lambda[k], mu[k]));
  return s;
}

struct PowerSearch {
  std::vector<int> exponents;  // k_1, k_2, ... (all >= 1)
  std::vector<double> ratios;  // ||prod (I - W_n W_n^*) x|| / ||x|| per probe
  bool verified = false;
};

/// Smallest k_n with ||V_n^{*k_n} x|| < eps / 2^n ||x|| for every probe, then
/// an independent check of ||prod_n (I - V_n^{k_n} V_n^{*k_n}) x|| >= (1 - eps)||x||.
inline PowerSearch power_search(const std::vector<HardyOperator>& ops, const std::vector<HardyVector>& probes,
                                double eps, int max_power = 1000) {
  PowerSearch r;
  for (size_t n = 0; n < ops.size(); ++n) {
    const HardyOperator adj = ops[n].adjoint();
    const double thresh = eps / std::ldexp(1.0, static_cast<int>(n + 1));
    int best = 1;
    for (const auto& x : probes) {
      HardyVector y = x * (1.0 / x.norm());
      int k = 0;
      do {
        if (++k > max_power) throw Error(Errc::UnsafeDegree, "no admissible power found");
        y = adj.apply_checked(y);
      } while (y.norm() >= thresh);
      best = std::max(best, k);
    }
    r.exponents.push_back(best);
  }
  r.verified = true;
  for (const auto& x : probes) {
    HardyVector y = x;
    for (size_t n = ops.size(); n-- > 0;) {
      HardyVector w = y;
      const HardyOperator adj = ops[n].adjoint();
      for (int k = 0; k < r.exponents[n]; ++k) w = adj.apply_checked(w);
      for (int k = 0; k < r.exponents[n]; ++k) w = ops[n].apply_checked(w);
      y = y - w;
    }
    r.ratios.push_back(y.norm() / x.norm());
    if (r.ratios.back() < 1.0 - eps) r.verified = false;
  }
  return r;
}

struct QuasiBeurlingSeries {
  double sum = 0.0;         // sum over blocks of the truncated series
  double norm_sq = 0.0;     // ||x||^2
  double tail_bound = 0.0;  // certified truncation error of the sum
};

/// Series of the quasi-Beurling decomposition criterion for a block-diagonal
/// direct sum: block k is paired with point lambda^{(k)} and the component of
/// x in that block.
inline QuasiBeurlingSeries quasi_beurling_series(const std::vector<ContractionTuple>& blocks,
                                                 const std::vector<MoebiusPoint>& points, const Vector& x, int d) {
  if (blocks.size() != points.size()) throw Error(Errc::DimensionMismatch, "one point per block required");
  if (blocks.empty()) throw Error(Errc::InvalidArgument, "no blocks");
  ContractionTuple sum = blocks.front();
  for (size_t i = 1; i < blocks.size(); ++i) sum = direct_sum(sum, blocks[i]);
  if (x.size() != sum.space_dim()) throw Error(Errc::DimensionMismatch, "probe has wrong dimension");
  QuasiBeurlingSeries r;
  r.norm_sq = x.squaredNorm();
  Index offset = 0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    Vector part = Vector::Zero(x.size());
    const Index dim = blocks[i].space_dim();
    part.segment(offset, dim) = x.segment(offset, dim);
    const ContractionTuple moved = mobius_tuple(sum, points[i]);
    r.sum += norm_identity_check(moved, part, d).partial_sum;
    r.tail_bound += norm_tail_bound(moved, d) * part.squaredNorm();
    offset += dim;
  }
  return r;
}

}  // namespace dcmodel
