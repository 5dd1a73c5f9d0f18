#pragma once

// Degree-truncated vector-valued Hardy space over finitely many variables of
// the Hilbert multidisk. Basis elements are pairs (monomial, coefficient
// slot); monomials are graded by total degree, so every section P_c of
// degree <= c is a prefix of the index range.

#include <algorithm>
#include <compare>
#include <cstdlib>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "dcmodel/contraction.hpp"
#include "dcmodel/linops.hpp"

namespace dcmodel {

/// Finitely supported exponent sequence; trailing zeros are dropped.
class MultiIndex {
 public:
  MultiIndex() = default;
  MultiIndex(std::initializer_list<int> e) : MultiIndex(std::vector<int>(e)) {}
  explicit MultiIndex(std::vector<int> exponents) : e_(std::move(exponents)) {
    for (int v : e_)
      if (v < 0) throw Error(Errc::InvalidArgument, "negative exponent");
    while (!e_.empty() && e_.back() == 0) e_.pop_back();
  }

  /// 1 in position k (zero-based).
  static MultiIndex unit(size_t k, int power = 1) {
    std::vector<int> e(k + 1, 0);
    e[k] = power;
    return MultiIndex(std::move(e));
  }

  int operator[](size_t k) const { return k < e_.size() ? e_[k] : 0; }
  size_t support_size() const { return e_.size(); }
  const std::vector<int>& exponents() const { return e_; }
  int degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }

  MultiIndex operator+(const MultiIndex& o) const {
    std::vector<int> e(std::max(e_.size(), o.e_.size()), 0);
    for (size_t k = 0; k < e.size(); ++k) e[k] = (*this)[k] + o[k];
    return MultiIndex(std::move(e));
  }

  auto operator<=>(const MultiIndex&) const = default;

 private:
  std::vector<int> e_;
};

inline constexpr Index kDefaultBasisCap = 200000;

/// Basis-size cap; DCMODEL_BASIS_CAP in the environment overrides the default.
inline Index basis_cap() {
  if (const char* env = std::getenv("DCMODEL_BASIS_CAP")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<Index>(v);
  }
  return kDefaultBasisCap;
}

/// C(n + d, d), or -1 once it exceeds `limit`.
inline Index monomial_count(int n, int d, Index limit) {
  long double c = 1.0L;
  for (int i = 1; i <= d; ++i) {
    c = c * static_cast<long double>(n + i) / static_cast<long double>(i);
    if (c > static_cast<long double>(limit) + 0.5L) return -1;
  }
  return static_cast<Index>(c + 0.5L);
}

/// Monomials in n variables of total degree <= d, ascending in degree and
/// descending-lexicographic within a degree (1, z1, z2, z1^2, z1 z2, z2^2, ...).
class HardyBasis {
 public:
  HardyBasis(int n, int d, int e) : n_(n), d_(d), e_(e) {
    if (n < 1 || d < 0 || e < 1) throw Error(Errc::InvalidArgument, "basis needs n >= 1, d >= 0, e >= 1");
    const Index cap = basis_cap();
    const Index monos = monomial_count(n, d, cap);
    if (monos < 0 || monos * e > cap)
      throw Error(Errc::SizeOverflow, "basis for n=" + std::to_string(n) + ", d=" + std::to_string(d) +
                                          ", e=" + std::to_string(e) + " exceeds cap " + std::to_string(cap));
    exps_.reserve(static_cast<size_t>(monos * n));
    upto_.assign(static_cast<size_t>(d + 1), 0);
    std::vector<int> cur(static_cast<size_t>(n), 0);
    for (int deg = 0; deg <= d; ++deg) {
      emit(cur, 0, deg);
      upto_[static_cast<size_t>(deg)] = num_monomials();
    }
    const Index m = num_monomials();
    raise_.assign(static_cast<size_t>(n * m), -1);
    lower_.assign(static_cast<size_t>(n * m), -1);
    for (Index i = 0; i < m; ++i) lookup_.emplace(monomial(i), i);
    for (Index i = 0; i < m; ++i) {
      if (degree(i) == d) continue;
      for (int k = 0; k < n; ++k) {
        std::vector<int> up(exps_.begin() + i * n, exps_.begin() + (i + 1) * n);
        ++up[static_cast<size_t>(k)];
        const Index j = lookup_.at(MultiIndex(up));
        raise_[static_cast<size_t>(k * m + i)] = j;
        lower_[static_cast<size_t>(k * m + j)] = i;
      }
    }
  }

  int num_vars() const { return n_; }
  int max_degree() const { return d_; }
  int coeff_dim() const { return e_; }
  Index num_monomials() const { return static_cast<Index>(degrees_.size()); }
  Index size() const { return num_monomials() * e_; }

  /// Number of basis elements of total degree <= c (c < 0 gives 0).
  Index section_size(int c) const {
    if (c < 0) return 0;
    return upto_[static_cast<size_t>(std::min(c, d_))] * e_;
  }

  int exponent(Index mono, int k) const { return exps_[static_cast<size_t>(mono * n_ + k)]; }
  int degree(Index mono) const { return degrees_[static_cast<size_t>(mono)]; }
  /// Total degree of basis element `i`.
  int element_degree(Index i) const { return degree(i / e_); }

  MultiIndex monomial(Index mono) const {
    return MultiIndex(std::vector<int>(exps_.begin() + mono * n_, exps_.begin() + (mono + 1) * n_));
  }

  /// Monomial index, or -1 when alpha is outside the truncation.
  Index find(const MultiIndex& alpha) const {
    if (alpha.support_size() > static_cast<size_t>(n_) || alpha.degree() > d_) return -1;
    std::vector<int> padded(static_cast<size_t>(n_), 0);
    for (size_t k = 0; k < alpha.support_size(); ++k) padded[k] = alpha[k];
    return lookup_.at(MultiIndex(padded));
  }

  Index index(Index mono, int slot) const { return mono * e_ + slot; }

  /// Index of zeta_k * zeta^alpha, or -1 if it leaves the truncation.
  Index raise(int k, Index mono) const { return raise_[static_cast<size_t>(k * num_monomials() + mono)]; }
  /// Index of zeta^alpha / zeta_k, or -1 if alpha_k = 0.
  Index lower(int k, Index mono) const { return lower_[static_cast<size_t>(k * num_monomials() + mono)]; }

  bool same_shape(const HardyBasis& o) const { return n_ == o.n_ && d_ == o.d_ && e_ == o.e_; }
  bool same_grading(const HardyBasis& o) const { return n_ == o.n_ && d_ == o.d_; }

 private:
  void emit(std::vector<int>& cur, int k, int remaining) {
    if (k == n_ - 1) {
      cur[static_cast<size_t>(k)] = remaining;
      exps_.insert(exps_.end(), cur.begin(), cur.end());
      degrees_.push_back(std::accumulate(cur.begin(), cur.end(), 0));
      return;
    }
    for (int v = remaining; v >= 0; --v) {
      cur[static_cast<size_t>(k)] = v;
      emit(cur, k + 1, remaining - v);
    }
    cur[static_cast<size_t>(k)] = 0;
  }

  int n_, d_, e_;
  std::vector<int> exps_;
  std::vector<int> degrees_;
  std::vector<Index> upto_;
  std::vector<Index> raise_, lower_;
  std::map<MultiIndex, Index> lookup_;
};

using BasisPtr = std::shared_ptr<const HardyBasis>;

inline BasisPtr enumerate_basis(int n, int d, int e) { return std::make_shared<const HardyBasis>(n, d, e); }

inline BasisPtr with_coeff_dim(const BasisPtr& b, int e) {
  return b->coeff_dim() == e ? b : enumerate_basis(b->num_vars(), b->max_degree(), e);
}

/// Points of the multidisk with finite support.
using KernelPoint = MoebiusPoint;

/// lambda^alpha.
inline Complex monomial_value(const HardyBasis& b, Index mono, const KernelPoint& lambda) {
  Complex v(1.0);
  for (int k = 0; k < b.num_vars(); ++k)
    for (int p = 0; p < b.exponent(mono, k); ++p) v *= lambda[static_cast<size_t>(k)];
  return v;
}

class HardyVector {
 public:
  HardyVector() = default;
  HardyVector(BasisPtr basis, Vector coeffs) : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_->size()) throw Error(Errc::DimensionMismatch, "coefficient count != basis size");
  }
  static HardyVector zero(BasisPtr basis) {
    const Index n = basis->size();
    return {std::move(basis), Vector::Zero(n)};
  }
  /// zeta^alpha (x) e_slot.
  static HardyVector monomial(BasisPtr basis, const MultiIndex& alpha, int slot = 0) {
    const Index m = basis->find(alpha);
    if (m < 0) throw Error(Errc::DegreeOverflow, "monomial outside the truncation");
    HardyVector v = zero(basis);
    v.coeffs_(basis->index(m, slot)) = 1.0;
    return v;
  }

  const BasisPtr& basis() const { return basis_; }
  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }

  double squared_norm() const { return coeffs_.squaredNorm(); }
  double norm() const { return coeffs_.norm(); }
  Complex inner(const HardyVector& o) const { return o.coeffs_.dot(coeffs_); }  // <this, o>

  /// F(lambda) in the coefficient space.
  Vector evaluate(const KernelPoint& lambda) const {
    Vector out = Vector::Zero(basis_->coeff_dim());
    for (Index m = 0; m < basis_->num_monomials(); ++m) {
      const Complex w = monomial_value(*basis_, m, lambda);
      for (int s = 0; s < basis_->coeff_dim(); ++s) out(s) += w * coeffs_(basis_->index(m, s));
    }
    return out;
  }

  HardyVector operator+(const HardyVector& o) const { return {basis_, coeffs_ + o.coeffs_}; }
  HardyVector operator-(const HardyVector& o) const { return {basis_, coeffs_ - o.coeffs_}; }
  HardyVector operator*(Complex c) const { return {basis_, coeffs_ * c}; }

 private:
  BasisPtr basis_;
  Vector coeffs_;
};

/// Degree-k homogeneous part.
inline HardyVector homogeneous_component(const HardyVector& f, int k) {
  const auto& b = *f.basis();
  if (k < 0 || k > b.max_degree()) throw Error(Errc::IndexOutOfRange, "homogeneous degree outside [0, d]");
  HardyVector out = HardyVector::zero(f.basis());
  const Index lo = b.section_size(k - 1), hi = b.section_size(k);
  out.coeffs().segment(lo, hi - lo) = f.coeffs().segment(lo, hi - lo);
  return out;
}

/// Truncated K_lambda (x) x: coefficients conj(lambda)^alpha x.
inline HardyVector kernel_vector(const KernelPoint& lambda, BasisPtr basis, const Vector& x) {
  if (x.size() != basis->coeff_dim()) throw Error(Errc::DimensionMismatch, "kernel slot vector has wrong size");
  if (lambda.size() > static_cast<size_t>(basis->num_vars()))
    throw Error(Errc::InvalidArgument, "kernel point supported beyond the materialized variables");
  HardyVector out = HardyVector::zero(basis);
  for (Index m = 0; m < basis->num_monomials(); ++m) {
    const Complex w = std::conj(monomial_value(*basis, m, lambda));
    out.coeffs().segment(basis->index(m, 0), basis->coeff_dim()) = w * x;
  }
  return out;
}

inline HardyVector kernel_vector(const KernelPoint& lambda, BasisPtr basis, int slot = 0) {
  Vector x = Vector::Zero(basis->coeff_dim());
  x(slot) = 1.0;
  return kernel_vector(lambda, std::move(basis), x);
}

/// Complete homogeneous sums h_0..h_d of the values r_k.
inline std::vector<double> complete_homogeneous(const std::vector<double>& r, int d) {
  std::vector<double> h(static_cast<size_t>(d + 1), 0.0);
  h[0] = 1.0;
  for (double v : r)
    for (size_t j = 1; j < h.size(); ++j) h[j] += v * h[j - 1];
  return h;
}

/// ||K_lambda||^2 - ||P_d K_lambda||^2, summed term by term beyond degree d.
inline double kernel_tail_sq(const KernelPoint& lambda, int d) {
  std::vector<double> r;
  for (const auto& c : lambda.coords())
    if (c != Complex(0.0)) r.push_back(std::norm(c));
  if (r.empty()) return 0.0;
  std::vector<double> prev(r.size(), 1.0);  // h_{k-1} of each prefix of r
  double tail = 0.0, last = 1.0;
  for (int k = 1; k < 10000000; ++k) {
    double acc = 0.0;
    for (size_t j = 0; j < r.size(); ++j) {
      acc += r[j] * prev[j];
      prev[j] = acc;
    }
    const double term = prev.back();
    if (k > d) {
      tail += term;
      if (term <= 1e-17 * tail && term <= last) break;
    }
    last = term;
  }
  return tail;
}

/// A truncated operator between two Hardy bases with the same grading. It
/// raises total degree by at most degree_shift and lowers it by at most
/// degree_drop. Column x is exact when the matrix reproduces the untruncated
/// operator on x; rows of degree <= row_exact_degree are exact on every input.
class HardyOperator {
 public:
  HardyOperator(BasisPtr in, BasisPtr out, Matrix m, int degree_shift, int degree_drop, std::vector<char> exact,
                int row_exact_degree)
      : in_(std::move(in)),
        out_(std::move(out)),
        m_(std::move(m)),
        shift_(degree_shift),
        drop_(degree_drop),
        exact_(std::move(exact)),
        row_exact_(row_exact_degree) {
    if (!in_->same_grading(*out_)) throw Error(Errc::DimensionMismatch, "bases differ in grading");
    if (m_.rows() != out_->size() || m_.cols() != in_->size() ||
        static_cast<Index>(exact_.size()) != in_->size())
      throw Error(Errc::DimensionMismatch, "operator matrix does not match its bases");
  }

  static HardyOperator identity(const BasisPtr& b) {
    return {b, b, dcmodel::identity(b->size()), 0, 0, std::vector<char>(static_cast<size_t>(b->size()), 1),
            b->max_degree()};
  }

  const BasisPtr& basis_in() const { return in_; }
  const BasisPtr& basis_out() const { return out_; }
  const Matrix& matrix() const { return m_; }
  int degree_shift() const { return shift_; }
  int degree_drop() const { return drop_; }
  int row_exact_degree() const { return row_exact_; }
  bool column_exact(Index i) const { return exact_[static_cast<size_t>(i)] != 0; }
  const std::vector<char>& exact_mask() const { return exact_; }

  /// Largest c such that every input of degree <= c is handled exactly (-1 if none).
  int safe_input_degree() const {
    for (Index i = 0; i < in_->size(); ++i)
      if (!column_exact(i)) return in_->element_degree(i) - 1;
    return in_->max_degree();
  }

  std::vector<Index> exact_columns() const {
    std::vector<Index> cols;
    for (Index i = 0; i < in_->size(); ++i)
      if (column_exact(i)) cols.push_back(i);
    return cols;
  }

  HardyVector apply(const HardyVector& v) const {
    if (!v.basis()->same_shape(*in_)) throw Error(Errc::DimensionMismatch, "vector basis differs from operator input");
    return {out_, m_ * v.coeffs()};
  }

  /// Like apply, but refuses vectors supported on inexact columns.
  HardyVector apply_checked(const HardyVector& v) const {
    for (Index i = 0; i < v.coeffs().size(); ++i)
      if (v.coeffs()(i) != Complex(0.0) && !column_exact(i))
        throw Error(Errc::UnsafeDegree, "input has support of degree " + std::to_string(in_->element_degree(i)) +
                                            " beyond the exact range");
    return apply(v);
  }

  HardyOperator adjoint() const {
    const int d = out_->max_degree();
    const int limit = std::min(row_exact_, d - drop_);
    std::vector<char> ex(static_cast<size_t>(out_->size()));
    for (Index i = 0; i < out_->size(); ++i) ex[static_cast<size_t>(i)] = out_->element_degree(i) <= limit;
    return {out_, in_, m_.adjoint(), drop_, shift_, std::move(ex), safe_input_degree()};
  }

  /// b * a, i.e. a first.
  friend HardyOperator operator*(const HardyOperator& b, const HardyOperator& a) {
    if (!a.out_->same_shape(*b.in_)) throw Error(Errc::DimensionMismatch, "composition of incompatible operators");
    Matrix m = b.m_ * a.m_;
    std::vector<char> ex(static_cast<size_t>(a.in_->size()), 0);
    for (Index x = 0; x < a.in_->size(); ++x) {
      if (!a.column_exact(x)) continue;
      bool ok = true;
      for (Index z = 0; z < a.m_.rows() && ok; ++z)
        if (a.m_(z, x) != Complex(0.0) && !b.column_exact(z)) ok = false;
      ex[static_cast<size_t>(x)] = ok;
    }
    const int d = a.in_->max_degree();
    const int row = std::min({b.row_exact_, a.row_exact_ - b.drop_, d - b.drop_});
    return {a.in_, b.out_, std::move(m), a.shift_ + b.shift_, a.drop_ + b.drop_, std::move(ex), row};
  }

  friend HardyOperator operator+(const HardyOperator& a, const HardyOperator& b) { return combine(a, b, 1.0); }
  friend HardyOperator operator-(const HardyOperator& a, const HardyOperator& b) { return combine(a, b, -1.0); }

  friend HardyOperator operator*(Complex c, const HardyOperator& a) {
    return {a.in_, a.out_, c * a.m_, a.shift_, a.drop_, a.exact_, a.row_exact_};
  }

 private:
  static HardyOperator combine(const HardyOperator& a, const HardyOperator& b, double sign) {
    if (!a.in_->same_shape(*b.in_) || !a.out_->same_shape(*b.out_))
      throw Error(Errc::DimensionMismatch, "sum of incompatible operators");
    std::vector<char> ex(a.exact_.size());
    for (size_t i = 0; i < ex.size(); ++i) ex[i] = a.exact_[i] && b.exact_[i];
    return {a.in_,
            a.out_,
            a.m_ + sign * b.m_,
            std::max(a.shift_, b.shift_),
            std::max(a.drop_, b.drop_),
            std::move(ex),
            std::min(a.row_exact_, b.row_exact_)};
  }

  BasisPtr in_, out_;
  Matrix m_;
  int shift_, drop_;
  std::vector<char> exact_;
  int row_exact_;
};

/// Operator norm of (a - b) restricted to the columns exact for both.
inline double safe_difference_norm(const HardyOperator& a, const HardyOperator& b) {
  if (!a.basis_in()->same_shape(*b.basis_in()) || !a.basis_out()->same_shape(*b.basis_out()))
    throw Error(Errc::DimensionMismatch, "comparison of incompatible operators");
  std::vector<Index> cols;
  for (Index i = 0; i < a.basis_in()->size(); ++i)
    if (a.column_exact(i) && b.column_exact(i)) cols.push_back(i);
  if (cols.empty()) return 0.0;
  Matrix diff(a.matrix().rows(), static_cast<Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j)
    diff.col(static_cast<Index>(j)) = a.matrix().col(cols[j]) - b.matrix().col(cols[j]);
  return op_norm(diff);
}

/// Common safe cutoff of two operators.
inline int joint_safe_degree(const HardyOperator& a, const HardyOperator& b) {
  return std::min(a.safe_input_degree(), b.safe_input_degree());
}

namespace detail {

inline void check_var(const HardyBasis& b, int k) {
  if (k < 0 || k >= b.num_vars())
    throw Error(Errc::IndexOutOfRange, "variable index " + std::to_string(k + 1) + " outside 1.." +
                                           std::to_string(b.num_vars()));
}

}  // namespace detail

/// M_{zeta_k} (k zero-based) truncated to degree d.
inline HardyOperator shift(int k, const BasisPtr& basis) {
  detail::check_var(*basis, k);
  const auto& b = *basis;
  const int e = b.coeff_dim();
  Matrix m = Matrix::Zero(b.size(), b.size());
  std::vector<char> ex(static_cast<size_t>(b.size()));
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    const Index up = b.raise(k, mono);
    for (int s = 0; s < e; ++s) {
      ex[static_cast<size_t>(b.index(mono, s))] = up >= 0;
      if (up >= 0) m(b.index(up, s), b.index(mono, s)) = 1.0;
    }
  }
  return {basis, basis, std::move(m), 1, 0, std::move(ex), b.max_degree()};
}

/// The isometry acting on the zeta_k exponent m by m -> m + 3 (m even) and
/// m -> m - 1 (m odd).
inline HardyOperator theorem15_operator(int k, const BasisPtr& basis) {
  detail::check_var(*basis, k);
  const auto& b = *basis;
  const int e = b.coeff_dim();
  Matrix m = Matrix::Zero(b.size(), b.size());
  std::vector<char> ex(static_cast<size_t>(b.size()));
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    const int p = b.exponent(mono, k);
    Index target = -1;
    if (p % 2 == 1) {
      target = b.lower(k, mono);
    } else {
      target = mono;
      for (int step = 0; step < 3 && target >= 0; ++step) target = b.raise(k, target);
    }
    for (int s = 0; s < e; ++s) {
      ex[static_cast<size_t>(b.index(mono, s))] = target >= 0;
      if (target >= 0) m(b.index(target, s), b.index(mono, s)) = 1.0;
    }
  }
  return {basis, basis, std::move(m), 3, 1, std::move(ex), b.max_degree()};
}

/// Matrix-valued polynomial sum_alpha C_alpha zeta^alpha with C_alpha of size rows x cols.
struct MatrixPolynomial {
  Index rows = 1;
  Index cols = 1;
  std::map<MultiIndex, Matrix> terms;

  MatrixPolynomial() = default;
  MatrixPolynomial(Index r, Index c) : rows(r), cols(c) {}

  static MatrixPolynomial constant(const Matrix& c) {
    MatrixPolynomial p(c.rows(), c.cols());
    p.terms[MultiIndex{}] = c;
    return p;
  }

  /// theta(zeta_k) from one-variable coefficients.
  static MatrixPolynomial one_variable(int k, const std::vector<Matrix>& coeffs) {
    if (coeffs.empty()) throw Error(Errc::InvalidArgument, "empty one-variable polynomial");
    MatrixPolynomial p(coeffs.front().rows(), coeffs.front().cols());
    for (size_t j = 0; j < coeffs.size(); ++j) p.add(MultiIndex::unit(static_cast<size_t>(k), static_cast<int>(j)), coeffs[j]);
    return p;
  }

  static MatrixPolynomial scalar_one_variable(int k, const std::vector<Complex>& coeffs) {
    std::vector<Matrix> m;
    for (const auto& c : coeffs) m.push_back(Matrix::Constant(1, 1, c));
    return one_variable(k, m);
  }

  void add(const MultiIndex& alpha, const Matrix& c) {
    if (c.rows() != rows || c.cols() != cols) throw Error(Errc::DimensionMismatch, "polynomial coefficient size");
    auto [it, inserted] = terms.emplace(alpha, c);
    if (!inserted) it->second += c;
  }

  int degree() const {
    int d = 0;
    for (const auto& [alpha, c] : terms)
      if (c.cwiseAbs().maxCoeff() > 0.0) d = std::max(d, alpha.degree());
    return d;
  }

  Matrix operator()(const KernelPoint& lambda) const {
    Matrix out = Matrix::Zero(rows, cols);
    for (const auto& [alpha, c] : terms) {
      Complex w(1.0);
      for (size_t k = 0; k < alpha.support_size(); ++k)
        for (int p = 0; p < alpha[k]; ++p) w *= lambda[k];
      out += w * c;
    }
    return out;
  }
};

/// M_Psi for a polynomial symbol. The output basis shares the grading of
/// `basis` and has coefficient dimension symbol.rows.
inline HardyOperator mult_operator(const MatrixPolynomial& symbol, const BasisPtr& basis) {
  const auto& b = *basis;
  if (symbol.cols != b.coeff_dim()) throw Error(Errc::DimensionMismatch, "symbol columns != coefficient dimension");
  const int sdeg = symbol.degree();
  if (sdeg > b.max_degree())
    throw Error(Errc::DegreeOverflow, "symbol degree " + std::to_string(sdeg) + " exceeds truncation");
  for (const auto& [alpha, c] : symbol.terms)
    if (alpha.support_size() > static_cast<size_t>(b.num_vars()))
      throw Error(Errc::InvalidArgument, "symbol uses variables beyond the basis");
  BasisPtr out = with_coeff_dim(basis, static_cast<int>(symbol.rows));
  const Index eo = symbol.rows, ei = symbol.cols;
  Matrix m = Matrix::Zero(out->size(), b.size());
  std::vector<char> ex(static_cast<size_t>(b.size()));
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    const MultiIndex alpha = b.monomial(mono);
    for (const auto& [beta, c] : symbol.terms) {
      const Index target = out->find(alpha + beta);
      if (target < 0) continue;
      m.block(target * eo, mono * ei, eo, ei) += c;
    }
    for (Index s = 0; s < ei; ++s) ex[static_cast<size_t>(mono * ei + s)] = b.degree(mono) + sdeg <= b.max_degree();
  }
  return {basis, out, std::move(m), sdeg, 0, std::move(ex), b.max_degree()};
}

/// M_{theta~} with theta~(zeta) = theta(zeta_k).
inline HardyOperator one_variable_symbol(int k, const std::vector<Matrix>& theta, const BasisPtr& basis) {
  detail::check_var(*basis, k);
  return mult_operator(MatrixPolynomial::one_variable(k, theta), basis);
}

struct InnerReport {
  double residual = 0.0;  // ||(M* M - I) on exact columns||
  int safe_cutoff = -1;
  bool pass = false;
};

inline InnerReport is_inner_on_truncation(const HardyOperator& op, double tol) {
  InnerReport r;
  const auto cols = op.exact_columns();
  r.safe_cutoff = op.safe_input_degree();
  if (cols.empty()) return r;
  Matrix sel(op.matrix().rows(), static_cast<Index>(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j) sel.col(static_cast<Index>(j)) = op.matrix().col(cols[j]);
  r.residual = hermitian_norm(sel.adjoint() * sel - dcmodel::identity(sel.cols()));
  r.pass = r.residual <= tol;
  return r;
}

struct WanderingSection {
  Subspace space;   // in the ambient coordinates of the basis
  int cutoff = -1;  // degrees certified
};

/// Joint kernel of the adjoints on the degrees where all adjoints are exact.
inline WanderingSection wandering_subspace(const std::vector<HardyOperator>& ops, const BasisPtr& basis,
                                           double tol = 1e-10) {
  WanderingSection w;
  w.cutoff = basis->max_degree();
  std::vector<HardyOperator> adj;
  for (const auto& v : ops) {
    if (!v.basis_out()->same_shape(*basis)) throw Error(Errc::DimensionMismatch, "operator lives on another basis");
    adj.push_back(v.adjoint());
    w.cutoff = std::min(w.cutoff, adj.back().safe_input_degree());
  }
  const Index cols = basis->section_size(w.cutoff);
  w.space.ambient_dim = basis->size();
  if (cols == 0) {
    w.space.basis = Matrix(basis->size(), 0);
    return w;
  }
  Index rows = 0;
  for (const auto& a : adj) rows += a.matrix().rows();
  Matrix stacked(rows, cols);
  Index r = 0;
  for (const auto& a : adj) {
    stacked.middleRows(r, a.matrix().rows()) = a.matrix().leftCols(cols);
    r += a.matrix().rows();
  }
  Subspace ker = null_space(stacked, tol);
  w.space.basis = Matrix::Zero(basis->size(), ker.dim());
  w.space.basis.topRows(cols) = ker.basis;
  return w;
}

struct SymbolSamples {
  std::vector<Matrix> values;  // Psi(lambda), e_out x e_in
  double intertwining_residual = 0.0;
  double truncation_error = 0.0;
};

/// Recovers Psi(lambda) from an operator intertwining the coordinate shifts,
/// reading the constant coefficient of T^*(K_lambda (x) x) slot by slot.
inline SymbolSamples symbol_from_intertwiner(const HardyOperator& t, const std::vector<KernelPoint>& samples,
                                             double tol = 1e-8) {
  const BasisPtr& bi = t.basis_in();
  const BasisPtr& bo = t.basis_out();
  SymbolSamples out;
  for (int k = 0; k < bi->num_vars(); ++k) {
    const HardyOperator lhs = t * shift(k, bi);
    const HardyOperator rhs = shift(k, bo) * t;
    out.intertwining_residual = std::max(out.intertwining_residual, safe_difference_norm(lhs, rhs));
  }
  if (out.intertwining_residual > tol)
    throw Error(Errc::NotIntertwining, "residual " + std::to_string(out.intertwining_residual));
  const int ei = bi->coeff_dim(), eo = bo->coeff_dim();
  bool constants_exact = true;
  for (int s = 0; s < ei; ++s) constants_exact = constants_exact && t.column_exact(s);
  const double t_norm = op_norm(t.matrix());
  const Matrix tadj = t.matrix().adjoint();
  for (const auto& lambda : samples) {
    Matrix psi_star(ei, eo);
    for (int s = 0; s < eo; ++s) {
      const HardyVector k = kernel_vector(lambda, bo, s);
      const Vector y = tadj * k.coeffs();
      psi_star.col(s) = y.head(ei);  // constant coefficient; K_lambda has constant term 1
    }
    out.values.push_back(psi_star.adjoint());
    if (!constants_exact)
      out.truncation_error =
          std::max(out.truncation_error, t_norm * std::sqrt(kernel_tail_sq(lambda, bo->max_degree())));
  }
  return out;
}

struct MobiusPartials {
  Complex partial_product{1.0};
  double cauchy_norm_sq = 0.0;
};

/// prod_{i=m+1}^{n} lambda_i and |prod - 1|^2 + (1 - |prod|^2).
inline MobiusPartials mobius_product_partials(const std::vector<Complex>& lambda, int m, int n) {
  if (m < 0 || m > n || n > static_cast<int>(lambda.size()))
    throw Error(Errc::IndexOutOfRange, "partial range (" + std::to_string(m) + ", " + std::to_string(n) + "]");
  MobiusPartials r;
  for (int i = m; i < n; ++i) r.partial_product *= lambda[static_cast<size_t>(i)];
  r.cauchy_norm_sq = std::norm(r.partial_product - 1.0) + (1.0 - std::norm(r.partial_product));
  return r;
}

// Index-level shift actions on coefficient blocks (rows = basis elements).
// They avoid dense N x N operators when only a few vectors are moved.

/// P_d M_{zeta_k} X.
inline Matrix shift_apply(const HardyBasis& b, int k, const Matrix& x) {
  const int e = b.coeff_dim();
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    const Index up = b.raise(k, mono);
    if (up >= 0) out.middleRows(up * e, e) = x.middleRows(mono * e, e);
  }
  return out;
}

/// M_{zeta_k}^* X (exact on the truncation).
inline Matrix shift_adjoint_apply(const HardyBasis& b, int k, const Matrix& x) {
  const int e = b.coeff_dim();
  Matrix out = Matrix::Zero(x.rows(), x.cols());
  for (Index mono = 0; mono < b.num_monomials(); ++mono) {
    const Index down = b.lower(k, mono);
    if (down >= 0) out.middleRows(down * e, e) = x.middleRows(mono * e, e);
  }
  return out;
}

/// P_d phi_a(M_{zeta_k}) X; the truncated shift is nilpotent, so the
/// resolvent series terminates after d + 1 terms.
inline Matrix mobius_shift_apply(const HardyBasis& b, int k, Complex a, const Matrix& x) {
  Matrix res = x, term = x;
  for (int j = 0; j < b.max_degree(); ++j) {
    term = std::conj(a) * shift_apply(b, k, term);
    res += term;
  }
  return a * res - shift_apply(b, k, res);
}

/// (P_d phi_a(M_{zeta_k}) P_d)^* X.
inline Matrix mobius_shift_adjoint_apply(const HardyBasis& b, int k, Complex a, const Matrix& x) {
  const Matrix y = std::conj(a) * x - shift_adjoint_apply(b, k, x);
  Matrix res = y, term = y;
  for (int j = 0; j < b.max_degree(); ++j) {
    term = a * shift_adjoint_apply(b, k, term);
    res += term;
  }
  return res;
}

}  // namespace dcmodel
