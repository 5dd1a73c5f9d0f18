#include <gtest/gtest.h>

#include <cmath>

#include "dcmodel/dilation.hpp"
#include "dcmodel/rng.hpp"
#include "oracles.hpp"

using namespace dcmodel;

namespace {

ContractionTuple scalar_half() { return ContractionTuple({Matrix::Constant(1, 1, 0.5)}); }

Matrix jordan_zero(Index n) {
  Matrix j = Matrix::Zero(n, n);
  for (Index i = 0; i + 1 < n; ++i) j(i + 1, i) = 1.0;
  return j;
}

ContractionTuple random_tensor(Rng& rng, std::vector<Index> dims, double norm) {
  std::vector<Matrix> f;
  for (Index n : dims) f.push_back(rng.matrix_with_norm(n, norm));
  return tensor_tuple(f);
}

template <class F>
void expect_code(Errc code, F&& f) {
  try {
    f();
    FAIL() << "no exception";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code);
  }
}

}  // namespace

TEST(NormIdentity, ScalarGeometricPartialSums) {
  const Vector x = Vector::Ones(1);
  for (int d : {0, 1, 5, 20}) {
    const auto r = norm_identity_check(scalar_half(), x, d);
    EXPECT_NEAR(r.residual, std::pow(0.25, d + 1), 1e-15);
  }
}

TEST(NormIdentity, NilpotentIsExactAtDegreeOne) {
  const ContractionTuple t({jordan_zero(2)});
  Rng rng(1);
  const Vector x = rng.vector(2);
  EXPECT_LT(std::abs(norm_identity_check(t, x, 1).residual), 1e-14);
  EXPECT_GT(norm_identity_check(t, x, 0).residual, 1e-3);
}

TEST(NormIdentity, ResidualDecreasesAndStaysUnderTailBound) {
  Rng rng(2);
  const ContractionTuple t = random_tensor(rng, {2, 2, 2}, 0.7);
  const Vector x = rng.vector(8).normalized();
  double prev = 2.0;
  for (int d = 0; d <= 30; d += 3) {
    const double res = norm_identity_check(t, x, d).residual;
    EXPECT_GE(res, -1e-12);
    EXPECT_LE(res, prev + 1e-14);
    EXPECT_LE(res, norm_tail_bound(t, d) + 1e-12);
    prev = res;
  }
}

TEST(NormIdentity, DimensionMismatch) {
  expect_code(Errc::DimensionMismatch, [] { norm_identity_check(scalar_half(), Vector::Ones(2), 3); });
}

TEST(TailBound, ScalarIsExact) {
  for (int d : {0, 3, 10}) EXPECT_NEAR(norm_tail_bound(scalar_half(), d), std::pow(0.25, d + 1), 1e-14);
}

TEST(TailBound, SelectsSmallestDegree) {
  EXPECT_EQ(select_truncation_degree(scalar_half(), 1e-6), 9);
  EXPECT_EQ(select_truncation_degree(scalar_half(), 0.3), 0);
}

TEST(TailBound, NilpotentNormOneComponent) {
  // ||J|| = 1 but J^3 = 0.
  const ContractionTuple t({jordan_zero(3)});
  const auto p = decay_profile(t);
  EXPECT_EQ(p.vanish[0], 3);
  EXPECT_LT(p.rate[0], 1.0);
  EXPECT_EQ(norm_tail_bound(t, 2), 0.0);
  Rng rng(16);
  const Vector x = rng.vector(3).normalized();
  for (int d = 0; d < 2; ++d) {
    EXPECT_GT(norm_tail_bound(t, d), 0.0);
    EXPECT_LE(norm_identity_check(t, x, d).residual, norm_tail_bound(t, d) + 1e-12);
  }
}

TEST(TailBound, NilpotentPairExactAtSummedIndex) {
  const ContractionTuple t = tensor_tuple({jordan_zero(2), jordan_zero(3)});
  EXPECT_EQ(norm_tail_bound(t, 3), 0.0);
  EXPECT_GT(norm_tail_bound(t, 2), 0.0);
  Rng rng(17);
  EXPECT_NEAR(norm_identity_check(t, rng.vector(6), 3).residual, 0.0, 1e-12);
}

TEST(TailBound, BoundsObservedTailForSlowDecay) {
  Matrix a = 0.995 * Matrix::Identity(2, 2);
  a(0, 1) = 0.004;
  const ContractionTuple t({a});
  const auto p = decay_profile(t);
  EXPECT_LT(p.rate[0], 1.0);
  Rng rng(3);
  const Vector x = rng.vector(2).normalized();
  EXPECT_LE(norm_identity_check(t, x, 200).residual, norm_tail_bound(t, 200, p) + 1e-12);
}

TEST(Embedding, ScalarColumnNorm) {
  const auto m = canonical_embedding(scalar_half(), 40);
  EXPECT_EQ(m.basis->coeff_dim(), 1);
  EXPECT_NEAR(m.embedding.col(0).squaredNorm(), 1.0 - std::pow(0.25, 41), 1e-15);
  const auto r = verify_dilation(m, 3, 1e-10);
  EXPECT_LE(r.dilation_raw, 1e-10);
  EXPECT_LE(r.regularity_raw, 1e-10);
  EXPECT_TRUE(r.pass);
}

TEST(Embedding, CoefficientsMatchDefinition) {
  Rng rng(4);
  const ContractionTuple t = random_tensor(rng, {2, 3}, 0.6);
  const auto m = canonical_embedding(t, 6);
  const int e = m.basis->coeff_dim();
  EXPECT_EQ(e, oracle::rank(m.defect_star));
  const auto q = m.defect_basis.basis;
  for (Index mono = 0; mono < m.basis->num_monomials(); ++mono) {
    const MultiIndex a = m.basis->monomial(mono);
    const Matrix expect = q.adjoint() * m.defect_star * t.power(a.exponents()).adjoint();
    EXPECT_LT((m.embedding.middleRows(mono * e, e) - expect).norm(), 1e-12);
  }
}

TEST(Embedding, NearIsometryMatchesTail) {
  Rng rng(5);
  const ContractionTuple t = random_tensor(rng, {2, 2}, 0.5);
  const int d = select_truncation_degree(t, 1e-10);
  const auto m = canonical_embedding(t, d);
  const Matrix gram = m.embedding.adjoint() * m.embedding;
  EXPECT_LE(oracle::norm2(gram - identity(4)), 1e-10);
  const Vector x = rng.vector(4);
  EXPECT_NEAR(m.tail_bound(x), norm_identity_check(t, x, d).residual, 1e-12);
}

TEST(Embedding, UnitaryHasZeroDefect) {
  expect_code(Errc::ZeroDefect, [] { canonical_embedding(ContractionTuple({identity(2)}), 3); });
}

TEST(Dilation, RandomTripleVerifies) {
  Rng rng(6);
  const ContractionTuple t = random_tensor(rng, {2, 2, 2}, 0.5);
  const auto m = canonical_embedding(t, 24);
  const auto r = verify_dilation(m, 3, 1e-10);
  EXPECT_LE(r.dilation_residual, 1e-10);
  EXPECT_LE(r.regularity_residual, 1e-10);
  EXPECT_LE(r.truncation_tail, r.certified_tail + 1e-12);
  EXPECT_LE(r.regularity_raw, r.truncation_tail + 1e-10);
  EXPECT_EQ(r.minimality_rank, r.minimality_target);
  EXPECT_TRUE(r.pass);
}

TEST(Dilation, CompressionOfShiftIsOracleProduct) {
  Rng rng(7);
  const ContractionTuple t = random_tensor(rng, {2, 3}, 0.5);
  const auto m = canonical_embedding(t, 40);
  const auto& b = *m.basis;
  // P_H M_1 U compared with T_1 using the dense shift.
  const Matrix mu = shift_apply(b, 0, m.embedding);
  EXPECT_LT(oracle::norm2(m.embedding.adjoint() * mu - t[0]), 1e-9);
  const Matrix mu2 = shift_adjoint_apply(b, 1, shift_apply(b, 0, m.embedding));
  EXPECT_LT(oracle::norm2(m.embedding.adjoint() * mu2 - t[1].adjoint() * t[0]), 1e-9);
}

TEST(Dilation, OrderCapAboveDegree) {
  const auto m = canonical_embedding(scalar_half(), 4);
  expect_code(Errc::UnsafeDegree, [&] { verify_dilation(m, 5, 1e-10); });
}

TEST(Dilation, RawTailVisibleAtLowDegree) {
  Rng rng(8);
  const ContractionTuple t = random_tensor(rng, {2, 2}, 0.9);
  const auto r = verify_dilation(canonical_embedding(t, 4), 2, 1e-10);
  EXPECT_LE(r.regularity_residual, 1e-10);
  EXPECT_GT(r.regularity_raw, 1e-4);
  EXPECT_LE(r.regularity_raw, r.certified_tail + 1e-10);
}

TEST(DefectTransfer, AgreesWithinTail) {
  Rng rng(9);
  const ContractionTuple t = random_tensor(rng, {2, 2}, 0.5);
  const auto m = canonical_embedding(t, select_truncation_degree(t, 1e-12));
  for (int i = 0; i < 5; ++i) {
    const MoebiusPoint lambda({rng.point_in_disk(0.6), rng.point_in_disk(0.6)});
    const Vector x = rng.vector(4).normalized();
    const auto r = defect_transfer_check(m, lambda, x);
    EXPECT_TRUE(r.pass) << r.difference << " vs " << r.tail_bound;
    EXPECT_LT(r.difference, 1e-5);
    EXPECT_GT(r.direct, 1e-3);
  }
}

TEST(DefectTransfer, ZeroPointIsDefectNorm) {
  Rng rng(10);
  const ContractionTuple t = random_tensor(rng, {3}, 0.4);
  const auto m = canonical_embedding(t, 30);
  const Vector x = rng.vector(3);
  const auto r = defect_transfer_check(m, MoebiusPoint(), x);
  EXPECT_NEAR(r.direct, (m.defect_star * x).norm(), 1e-13);
  EXPECT_NEAR(r.dilated, r.direct, 1e-8);
}

TEST(DefectTransfer, ExtraCoordinatesScale) {
  Rng rng(11);
  const ContractionTuple t = random_tensor(rng, {2}, 0.4);
  const auto m = canonical_embedding(t, 40);
  const Vector x = rng.vector(2);
  const auto r = defect_transfer_check(m, MoebiusPoint({0.2, 0.6}), x);
  EXPECT_TRUE(r.pass);
  const auto base = defect_transfer_check(m, MoebiusPoint({0.2}), x);
  EXPECT_NEAR(r.direct, 0.8 * base.direct, 1e-12);
}

TEST(SpanCompleteness, RandomTupleIsComplete) {
  Rng rng(12);
  const ContractionTuple t = random_tensor(rng, {2, 2, 2}, 0.8);
  const auto r = defect_span_completeness(t, deterministic_grid(3));
  EXPECT_EQ(r.rank, 8);
  EXPECT_TRUE(r.complete);
}

TEST(SpanCompleteness, SingleZeroPointMayBeIncomplete) {
  // D_{T*} for the nilpotent Jordan block has rank one.
  const ContractionTuple t({jordan_zero(3)});
  const auto r = defect_span_completeness(t, {MoebiusPoint()});
  EXPECT_EQ(r.rank, 1);
  EXPECT_FALSE(r.complete);
  EXPECT_TRUE(defect_span_completeness(t, deterministic_grid(1)).complete);
}

TEST(Grid, LexicographicLastFastest) {
  const auto g = deterministic_grid(2);
  ASSERT_EQ(g.size(), 25u);
  EXPECT_EQ(g[0].size(), 0u);
  EXPECT_EQ(g[1][1], Complex(0.45));
  EXPECT_EQ(g[5][0], Complex(0.45));
  EXPECT_EQ(g[5][1], Complex(0.0));
  EXPECT_EQ(deterministic_grid(1).size(), 5u);
  EXPECT_EQ(deterministic_grid(3, 7).size(), 7u);
}

TEST(Pseudometric, Values) {
  EXPECT_NEAR(equivalence_pseudometric(MoebiusPoint({0.5}), MoebiusPoint()), 0.25, 1e-15);
  EXPECT_NEAR(equivalence_pseudometric(MoebiusPoint({0.5, 0.5}), MoebiusPoint()), 0.5, 1e-15);
  EXPECT_EQ(equivalence_pseudometric(MoebiusPoint({0.3}), MoebiusPoint({0.3})), 0.0);
}

TEST(Pseudometric, SymmetricAndMoebiusInvariant) {
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    const Complex a = rng.point_in_disk(0.9), b = rng.point_in_disk(0.9), c = rng.point_in_disk(0.9);
    const MoebiusPoint l({a}), m({b});
    EXPECT_NEAR(equivalence_pseudometric(l, m), equivalence_pseudometric(m, l), 1e-14);
    const MoebiusPoint lc({mobius_scalar(c, a)}), mc({mobius_scalar(c, b)});
    EXPECT_NEAR(equivalence_pseudometric(l, m), equivalence_pseudometric(lc, mc), 1e-12);
  }
}

TEST(PowerSearch, ShiftOnOnePlusZ) {
  const auto b = enumerate_basis(1, 10, 1);
  const HardyVector x = HardyVector::monomial(b, MultiIndex{0}) + HardyVector::monomial(b, MultiIndex{1});
  const auto r = power_search({shift(0, b)}, {x}, 0.1);
  ASSERT_EQ(r.exponents.size(), 1u);
  EXPECT_EQ(r.exponents[0], 2);
  EXPECT_NEAR(r.ratios[0], 1.0, 1e-14);
  EXPECT_TRUE(r.verified);
}

TEST(PowerSearch, TwoVariablesThresholdsHalve) {
  const auto b = enumerate_basis(2, 12, 1);
  const HardyVector x = HardyVector::monomial(b, MultiIndex{2, 0}) + HardyVector::monomial(b, MultiIndex{0, 3});
  const auto r = power_search({shift(0, b), shift(1, b)}, {x}, 0.2);
  EXPECT_EQ(r.exponents, (std::vector<int>{3, 4}));
  EXPECT_TRUE(r.verified);
}

TEST(PowerSearch, UnsafeWhenTruncationTooShallow) {
  const auto b = enumerate_basis(1, 10, 1);
  const HardyVector x = HardyVector::monomial(b, MultiIndex{10});
  expect_code(Errc::UnsafeDegree, [&] { power_search({theorem15_operator(0, b)}, {x}, 0.1); });
}

TEST(QuasiBeurling, ZeroPointsReproduceNorm) {
  Rng rng(14);
  const ContractionTuple a = random_tensor(rng, {2, 2}, 0.5);
  const ContractionTuple c = random_tensor(rng, {3, 1}, 0.4);
  const Vector x = rng.vector(7);
  const auto r = quasi_beurling_series({a, c}, {MoebiusPoint(), MoebiusPoint()}, x, 40);
  EXPECT_NEAR(r.sum, r.norm_sq, r.tail_bound + 1e-12);
  EXPECT_LT(r.tail_bound, 1e-8);
}

TEST(QuasiBeurling, NonzeroPointsReproduceNorm) {
  Rng rng(15);
  const ContractionTuple a = random_tensor(rng, {2, 2}, 0.4);
  const ContractionTuple c = random_tensor(rng, {2, 2}, 0.4);
  const Vector x = rng.vector(8);
  const auto r = quasi_beurling_series({a, c}, {MoebiusPoint({0.3, -0.2}), MoebiusPoint({Complex(0, 0.25)})}, x, 60);
  EXPECT_NEAR(r.sum, r.norm_sq, r.tail_bound + 1e-12);
}

TEST(QuasiBeurling, MismatchedPoints) {
  expect_code(Errc::DimensionMismatch,
              [] { quasi_beurling_series({scalar_half()}, {MoebiusPoint(), MoebiusPoint()}, Vector::Ones(1), 3); });
}
