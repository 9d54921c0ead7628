#include <gtest/gtest.h>

#include "emfsec/hermitian.hpp"
#include "emfsec/random_instances.hpp"
#include "test_support.hpp"

using namespace emfsec;
using emfsec::testing::eig2_closed_form;
using emfsec::testing::herm;

TEST(Hermitian, RejectsNonHermitianInput) {
  ComplexMatrix a(2, 2);
  a << 1.0, 2.0, 0.0, 1.0;
  EXPECT_THROW(HermitianMatrix{a}, NumericalError);
  EXPECT_THROW(HermitianMatrix{ComplexMatrix(2, 3)}, NumericalError);
}

TEST(Hermitian, StorageIsExactlyHermitian) {
  ComplexMatrix a(2, 2);
  a << cdouble(1.0, 1e-14), cdouble(0.5, 0.25), cdouble(0.5, -0.25 + 1e-14), 2.0;
  const HermitianMatrix h(a);
  EXPECT_EQ(h.matrix(), h.matrix().adjoint().eval());
  EXPECT_EQ(h(0, 0).imag(), 0.0);
}

TEST(HermitianEig, DiagonalInput) {
  const auto e = hermitian_eig(HermitianMatrix::diagonal({1.0, 3.0}));
  EXPECT_DOUBLE_EQ(e.values[0], 3.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(0, 1)), 1.0, 1e-15);
}

TEST(HermitianEig, IdentityHasUnitEigenvaluesAndUnitaryVectors) {
  const auto e = hermitian_eig(HermitianMatrix::identity(2));
  EXPECT_DOUBLE_EQ(e.values[0], 1.0);
  EXPECT_DOUBLE_EQ(e.values[1], 1.0);
  EXPECT_LE((e.vectors.adjoint() * e.vectors - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(HermitianEig, ReconstructsRandomMatrices) {
  CounterRng rng(11, 0);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_hermitian(rng, 3);
    const auto e = hermitian_eig(a);
    RealVector d(3);
    for (int i = 0; i < 3; ++i) d(i) = e.values[static_cast<std::size_t>(i)];
    const ComplexMatrix rec = e.vectors * d.cast<cdouble>().asDiagonal() * e.vectors.adjoint();
    EXPECT_LE((rec - a.matrix()).norm(), 1e-10 * std::max(1.0, a.frobenius_norm()));
    EXPECT_TRUE(std::is_sorted(e.values.rbegin(), e.values.rend()));
  }
}

TEST(HermitianEig, MatchesCharacteristicPolynomialFor2x2) {
  CounterRng rng(12, 0);
  for (int t = 0; t < 200; ++t) {
    const auto a = random_hermitian(rng, 2);
    const auto e = hermitian_eig(a);
    const auto ref = eig2_closed_form(a.matrix());
    EXPECT_NEAR(e.values[0], ref[0], 1e-9);
    EXPECT_NEAR(e.values[1], ref[1], 1e-9);
  }
}

TEST(HalfFactor, ScaledIdentities) {
  EXPECT_LE((half_factor(HermitianMatrix::identity(2)).adjoint() * half_factor(HermitianMatrix::identity(2)) -
             0.5 * ComplexMatrix::Identity(2, 2))
                .norm(),
            1e-15);
  const ComplexMatrix l = half_factor(HermitianMatrix::identity(2, 2.0));
  EXPECT_LE((l.adjoint() * l - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
  const ComplexMatrix l1 = half_factor(HermitianMatrix::identity(2));
  EXPECT_LE((l1.adjoint() * l1 * 2.0 - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
}

TEST(HalfFactor, ReconstructsRandomGram) {
  CounterRng rng(13, 0);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_psd(rng, 3, 2.0);
    const ComplexMatrix l = half_factor(g);
    EXPECT_LE((2.0 * l.adjoint() * l - g.matrix()).norm(), 1e-10);
  }
}

TEST(HalfFactor, RejectsIndefinite) { EXPECT_THROW(half_factor(HermitianMatrix::diagonal({1.0, -1.0})), NumericalError); }

TEST(PsdProject, ClipsNegativeEigenvalues) {
  const auto p = psd_project(HermitianMatrix::diagonal({1.0, -2.0}));
  EXPECT_LE((p.matrix() - HermitianMatrix::diagonal({1.0, 0.0}).matrix()).norm(), 1e-15);
}

TEST(PsdProject, LeavesPsdUnchanged) {
  const auto a = herm({{2.0, {0.5, 0.5}}, {{0.5, -0.5}, 1.0}});
  EXPECT_EQ(psd_project(a).matrix(), a.matrix());
}

TEST(PsdProject, IsNearestPsdAndIdempotent) {
  CounterRng rng(14, 0);
  for (int t = 0; t < 100; ++t) {
    const auto a = random_hermitian(rng, 3);
    const auto p = psd_project(a);
    // Oracle: brute-force eigen-clip with Eigen's solver directly.
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.matrix());
    const RealVector clip = es.eigenvalues().cwiseMax(0.0);
    const ComplexMatrix ref = es.eigenvectors() * clip.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
    EXPECT_LE((p.matrix() - ref).norm(), 1e-10);
    EXPECT_GE(min_eigenvalue(p), -1e-12);
    const auto pp = psd_project(p);
    const auto e1 = hermitian_eig(p).values;
    const auto e2 = hermitian_eig(pp).values;
    for (std::size_t i = 0; i < e1.size(); ++i) EXPECT_NEAR(e1[i], e2[i], 1e-12);
    // Any other PSD matrix is at least as far away.
    const auto other = random_psd(rng, 3);
    EXPECT_LE((a - p).frobenius_norm(), (a - other).frobenius_norm() + 1e-12);
  }
}

TEST(HermitianMatrix, InnerProductIsRealTrace) {
  const auto a = herm({{1.0, {0.0, 1.0}}, {{0.0, -1.0}, 2.0}});
  const auto b = herm({{3.0, {1.0, 0.0}}, {{1.0, 0.0}, -1.0}});
  EXPECT_NEAR(a.inner(b), (a.matrix() * b.matrix()).trace().real(), 1e-15);
}
