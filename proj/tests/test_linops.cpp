#include <gtest/gtest.h>

#include <cmath>

#include "dcmodel/linops.hpp"
#include "dcmodel/rng.hpp"
#include "oracles.hpp"

using namespace dcmodel;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Matrix m = Matrix::Zero(static_cast<Index>(v.size()), static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(i, i) = x, ++i;
  return m;
}

Vector unit(Index n, Index k) {
  Vector v = Vector::Zero(n);
  v(k) = 1.0;
  return v;
}

Subspace span(const Matrix& cols) { return orthonormalize(cols, 1e-12); }

}  // namespace

TEST(HermitianSqrt, IdentityIsFixed) {
  EXPECT_LT((hermitian_sqrt(identity(3), 1e-12) - identity(3)).norm(), 1e-14);
}

TEST(HermitianSqrt, DiagonalRoots) {
  EXPECT_LT((hermitian_sqrt(diag({4.0, 0.0}), 1e-12) - diag({2.0, 0.0})).norm(), 1e-14);
}

TEST(HermitianSqrt, SquaresBackToGramian) {
  Rng rng(11);
  const Matrix c = rng.matrix(4, 4);
  const Matrix a = c.adjoint() * c;
  const Matrix m = hermitian_sqrt(a, 1e-12);
  EXPECT_LE((m * m - a).norm(), 1e-10);
  EXPECT_LE((m - m.adjoint()).norm(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(HermitianSqrt, ClampsTinyNegativeEigenvalue) {
  const Matrix m = hermitian_sqrt(diag({1.0, -1e-14}), 1e-12);
  EXPECT_EQ(m(1, 1), Complex(0.0));
}

TEST(HermitianSqrt, RejectsAsymmetry) {
  Matrix a = identity(2);
  a(0, 1) = 0.5;
  try {
    hermitian_sqrt(a, 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotHermitian);
  }
}

TEST(HermitianSqrt, RejectsNegativeEigenvalue) {
  try {
    hermitian_sqrt(diag({1.0, -0.1}), 1e-12);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NegativeEigenvalue);
  }
}

TEST(SolveShifted, ZeroShiftIsIdentity) {
  Rng rng(3);
  EXPECT_LT((solve_shifted(rng.matrix(3, 3), 0.0) - identity(3)).norm(), 1e-15);
}

TEST(SolveShifted, NilpotentTerminates) {
  Matrix n = Matrix::Zero(2, 2);
  n(0, 1) = 1.0;
  EXPECT_LT((solve_shifted(n, 0.5) - (identity(2) + 0.5 * n)).norm(), 1e-15);
}

TEST(SolveShifted, Scalar) {
  EXPECT_NEAR(solve_shifted(Matrix::Constant(1, 1, 0.5), 0.5)(0, 0).real(), 1.0 / 0.75, 1e-15);
}

TEST(SolveShifted, AgreesWithNeumannSeries) {
  Rng rng(5);
  const Matrix t = rng.matrix_with_norm(4, 0.5);
  const Complex z(0.3, -0.4);
  EXPECT_LT((solve_shifted(t, z) - oracle::neumann(t, z, 80)).norm(), 1e-12);
  EXPECT_LT(((identity(4) - z * t) * solve_shifted(t, z) - identity(4)).norm(), 1e-10);
}

TEST(SolveShifted, DetectsSingularShift) {
  try {
    solve_shifted(identity(2), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::SingularShift);
  }
}

TEST(Orthonormalize, RepeatedColumns) {
  Matrix v(3, 3);
  v << unit(3, 0), unit(3, 0), unit(3, 1);
  const Subspace s = orthonormalize(v, 1e-12);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_LT(subspace_distance(s, span((Matrix(3, 2) << unit(3, 0), unit(3, 1)).finished())), 1e-14);
}

TEST(Orthonormalize, ZeroInput) { EXPECT_EQ(orthonormalize(Matrix::Zero(4, 3), 1e-12).dim(), 0); }

TEST(Orthonormalize, RankMatchesSingularValues) {
  Rng rng(17);
  const Matrix v = rng.matrix(4, 10);
  const Subspace s = orthonormalize(v, 1e-10);
  EXPECT_EQ(s.dim(), oracle::rank(v));
  EXPECT_LT((s.basis.adjoint() * s.basis - identity(s.dim())).norm(), 1e-12);
}

TEST(Orthonormalize, RankDeficientInput) {
  Rng rng(19);
  const Matrix v = rng.matrix(6, 2) * rng.matrix(2, 5);
  EXPECT_EQ(orthonormalize(v, 1e-10).dim(), 2);
  EXPECT_EQ(orthonormalize(v, 1e-10, Pivoting::InOrder).dim(), 2);
}

TEST(Orthonormalize, DeterministicAcrossCalls) {
  Rng rng(23);
  const Matrix v = rng.matrix(5, 3);
  EXPECT_EQ(orthonormalize(v, 1e-12).basis, orthonormalize(v, 1e-12).basis);
}

TEST(Projector, FullSubspaceIsIdentity) {
  EXPECT_LT((projector(span(identity(3))) - identity(3)).norm(), 1e-14);
}

TEST(Projector, Line) {
  EXPECT_LT((projector(span(unit(2, 0))) - diag({1.0, 0.0})).norm(), 1e-15);
}

TEST(Projector, IdempotentAndHermitian) {
  Rng rng(29);
  const Matrix p = projector(span(rng.matrix(5, 2)));
  EXPECT_LE((p * p - p).norm(), 1e-12);
  EXPECT_LE((p - p.adjoint()).norm(), 1e-12);
}

TEST(SubspaceDistance, SelfIsZero) {
  Rng rng(31);
  const Subspace s = span(rng.matrix(4, 2));
  EXPECT_LT(subspace_distance(s, s), 1e-12);
}

TEST(SubspaceDistance, OrthogonalLines) {
  EXPECT_NEAR(subspace_distance(span(unit(2, 0)), span(unit(2, 1))), 1.0, 1e-15);
}

TEST(SubspaceDistance, DiagonalLineMatchesPrincipalAngle) {
  const Vector diagonal = (unit(2, 0) + unit(2, 1)) / std::sqrt(2.0);
  const double d = subspace_distance(span(unit(2, 0)), span(diagonal));
  EXPECT_NEAR(d, std::sin(M_PI / 4), 1e-12);
  EXPECT_NEAR(d, oracle::principal_gap(unit(2, 0), diagonal), 1e-12);
}

TEST(SubspaceDistance, RandomPlanesMatchPrincipalAngles) {
  Rng rng(37);
  for (int i = 0; i < 10; ++i) {
    const Subspace a = span(rng.matrix(6, 3));
    const Subspace b = span(rng.matrix(6, 3));
    EXPECT_NEAR(subspace_distance(a, b), oracle::principal_gap(a.basis, b.basis), 1e-10);
  }
}

TEST(SubspaceDistance, SymmetricAndTriangle) {
  Rng rng(41);
  for (int i = 0; i < 20; ++i) {
    const Subspace a = span(rng.matrix(5, 2)), b = span(rng.matrix(5, 2)), c = span(rng.matrix(5, 2));
    EXPECT_NEAR(subspace_distance(a, b), subspace_distance(b, a), 1e-12);
    EXPECT_LE(subspace_distance(a, c), subspace_distance(a, b) + subspace_distance(b, c) + 1e-10);
  }
}

TEST(SubspaceDistance, DimensionMismatch) {
  try {
    subspace_distance(span(unit(2, 0)), span(unit(3, 0)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(NullSpace, RecoversKernel) {
  Rng rng(43);
  const Matrix a = rng.matrix(2, 5);
  const Subspace k = null_space(a, 1e-10);
  EXPECT_EQ(k.dim(), 3);
  EXPECT_LT((a * k.basis).norm(), 1e-12);
}

TEST(SpectralRadius, UpperBoundsEigenvalues) {
  Rng rng(47);
  for (int i = 0; i < 10; ++i) {
    const Matrix a = rng.matrix_with_norm(4, 0.9);
    Eigen::ComplexEigenSolver<Matrix> es(a);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    const double est = spectral_radius_estimate(a);
    EXPECT_GE(est, rho - 1e-12);
    EXPECT_LE(est, 0.9 + 1e-12);
  }
}

TEST(SpectralRadius, NilpotentIsZero) {
  Matrix n = Matrix::Zero(3, 3);
  n(0, 1) = n(1, 2) = 1.0;
  EXPECT_EQ(spectral_radius_estimate(n), 0.0);
}

TEST(SpectralRadius, EscalatesForJordanBlocks) {
  // ||J^64||^{1/64} overshoots badly for a large Jordan block at 0.9.
  Matrix j = 0.9 * identity(8);
  for (int i = 0; i + 1 < 8; ++i) j(i, i + 1) = 0.1;
  const double plain = spectral_radius_estimate(j, 64);
  const double escalated = spectral_radius_estimate(j, 64, 0.9 + 1e-3);
  EXPECT_LE(escalated, plain);
  EXPECT_LT(escalated, 0.9 + 1e-3);
}
