#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "nsmfm/linalg.hpp"
#include "oracles.hpp"

using namespace nsmfm;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_symmetric(Index n, std::uint64_t seed) {
  const Matrix a = oracle::gaussian(n, n, seed);
  return a + a.transpose();
}

}  // namespace

TEST(SymmetricMatrix, SymmetrizesOnConstruction) {
  Matrix a(2, 2);
  a << 1, 2, 4, 3;
  const SymmetricMatrix s(a);
  EXPECT_DOUBLE_EQ(s.matrix()(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(s.matrix()(1, 0), 3.0);
}

TEST(SymmetricMatrix, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(SymmetricMatrix(Matrix::Zero(2, 3)), Error);
  Matrix a = Matrix::Identity(2, 2);
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(SymmetricMatrix{a}, Error);
}

TEST(SymEig, Identity) {
  const Spectrum s = sym_eig_desc(SymmetricMatrix(Matrix::Identity(3, 3)));
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(s.eigenvalues(j), 1.0, 1e-14);
}

TEST(SymEig, DiagonalKeepsAxes) {
  const Matrix d = Eigen::Vector2d(1, 3).asDiagonal();
  const Spectrum s = sym_eig_desc(SymmetricMatrix(d));
  EXPECT_NEAR(s.eigenvalues(0), 3.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), 1.0, 1e-14);
  EXPECT_NEAR(s.eigenvectors(1, 0), 1.0, 1e-14);
  EXPECT_NEAR(s.eigenvectors(0, 1), 1.0, 1e-14);
}

TEST(SymEig, TwoByTwoHandSolved) {
  Matrix a(2, 2);
  a << 2, 1, 1, 2;
  const Spectrum s = sym_eig_desc(SymmetricMatrix(a));
  EXPECT_NEAR(s.eigenvalues(0), 3.0, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), 1.0, 1e-14);
  EXPECT_NEAR(s.eigenvectors(0, 0), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(s.eigenvectors(1, 0), std::sqrt(0.5), 1e-14);
}

TEST(SymEig, SignConventionLargestEntryPositive) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Spectrum s = sym_eig_desc(SymmetricMatrix(random_symmetric(6, seed)));
    for (Index j = 0; j < s.size(); ++j) {
      Index imax = 0;
      s.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
      EXPECT_GT(s.eigenvectors(imax, j), 0.0);
    }
  }
}

TEST(SymEigProperty, OrderOrthonormalityReconstruction) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index n = 2 + static_cast<Index>(seed % 9);
    const Matrix a = random_symmetric(n, 100 + seed);
    const Spectrum s = sym_eig_desc(SymmetricMatrix(a));
    for (Index j = 0; j + 1 < n; ++j) EXPECT_GE(s.eigenvalues(j), s.eigenvalues(j + 1));
    const Matrix gram = s.eigenvectors.transpose() * s.eigenvectors;
    EXPECT_LE((gram - Matrix::Identity(n, n)).norm(), 1e-10);
    for (Index j = 0; j < n; ++j) {
      const double r = (a * s.eigenvectors.col(j) - s.eigenvalues(j) * s.eigenvectors.col(j)).norm();
      EXPECT_LE(r, 1e-8 * (1.0 + std::abs(s.eigenvalues(j))));
    }
    const Matrix back = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
    EXPECT_LE((back - a).norm(), 1e-8 * a.norm());
  }
}

TEST(TopK, ScaledLeadingEigenvector) {
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = 3;
  d(1, 1) = 1;
  const Loadings l = top_k_loadings(SymmetricMatrix(d), 1, 4);
  ASSERT_EQ(l.h(), 1);
  EXPECT_NEAR(l.matrix()(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(l.matrix().col(0).tail(3).norm(), 0.0, 1e-14);
}

TEST(TopK, IdentityConstraint) {
  const Loadings l = top_k_loadings(SymmetricMatrix(Matrix::Identity(2, 2)), 2, 2);
  EXPECT_LE((l.matrix().transpose() * l.matrix() / 2.0 - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(TopK, RankOneRecoversSpan) {
  const Matrix r = oracle::gaussian(7, 1, 3);
  const Loadings l = top_k_loadings(SymmetricMatrix(2.5 * r * r.transpose()), 1, 7);
  EXPECT_LE(subspace_distance(l.matrix(), r), 1e-10);
}

TEST(TopK, ZeroColumnsAndTooMany) {
  const Loadings l = top_k_loadings(SymmetricMatrix(Matrix::Identity(3, 3)), 0, 3);
  EXPECT_EQ(l.p(), 3);
  EXPECT_TRUE(l.empty());
  EXPECT_THROW(top_k_loadings(SymmetricMatrix(Matrix::Identity(3, 3)), 4, 3), Error);
}

TEST(TopKProperty, LoadingNormalization) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index p = 3 + static_cast<Index>(seed % 12);
    const Index k = 1 + static_cast<Index>(seed % static_cast<std::uint64_t>(p));
    const Matrix a = oracle::gaussian(p, p + 2, 500 + seed);
    const Loadings l = top_k_loadings(SymmetricMatrix(a * a.transpose()), k, p);
    const Matrix g = l.matrix().transpose() * l.matrix() / static_cast<double>(p);
    EXPECT_LE((g - Matrix::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Projector, AxisAligned) {
  const Projector p = orth_projector_complement(Loadings(col({std::sqrt(2.0), 0.0})));
  Matrix expect = Matrix::Zero(2, 2);
  expect(1, 1) = 1;
  EXPECT_LE((p.matrix() - expect).norm(), 1e-14);
}

TEST(Projector, EmptyIsIdentity) {
  const Projector p = orth_projector_complement(Loadings::none(4));
  EXPECT_EQ(p.matrix(), Matrix::Identity(4, 4));
}

TEST(Projector, MatchesClosedFormTwoColumnOracle) {
  const Matrix l = oracle::gaussian(5, 2, 11);
  const Projector p = orth_projector_complement(Loadings(l));
  EXPECT_LE((p.matrix() - oracle::complement_projector_2col(l)).norm(), 1e-12);
}

TEST(Projector, SingularGramRejected) {
  Matrix l(3, 2);
  l << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(orth_projector_complement(Loadings(l)), Error);
}

TEST(ProjectorProperty, SymmetricIdempotentAnnihilating) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index p = 3 + static_cast<Index>(seed % 10);
    const Index h = 1 + static_cast<Index>(seed % static_cast<std::uint64_t>(p - 1));
    const Matrix l = oracle::gaussian(p, h, 900 + seed);
    const Matrix pm = orth_projector_complement(Loadings(l)).matrix();
    EXPECT_LE((pm - pm.transpose()).norm(), 1e-10);
    EXPECT_LE((pm * pm - pm).norm(), 1e-10);
    EXPECT_LE((pm * l).norm(), 1e-8 * l.norm());
  }
}

TEST(SubspaceDistance, HandExamples) {
  const Matrix e1 = col({1, 0});
  const Matrix e2 = col({0, 1});
  const Matrix d = col({std::sqrt(0.5), std::sqrt(0.5)});
  EXPECT_NEAR(subspace_distance(e1, e1), 0.0, 1e-12);
  EXPECT_NEAR(subspace_distance(e1, e2), 1.0, 1e-12);
  EXPECT_NEAR(subspace_distance(e1, d), std::sqrt(0.5), 1e-12);
}

TEST(SubspaceDistance, InvariantToScaleAndBasis) {
  const Matrix a = oracle::gaussian(8, 3, 21);
  Matrix mix(3, 3);
  mix << 2, 1, 0, 0, 1, 0, 1, 0, 3;
  EXPECT_LE(subspace_distance(a, 5.0 * a * mix), 1e-10);
}

TEST(SubspaceDistance, UnequalDimensions) {
  Matrix a = Matrix::Zero(3, 2);
  a(0, 0) = a(1, 1) = 1;
  EXPECT_NEAR(subspace_distance(a, col({1, 0, 0})), std::sqrt(0.5), 1e-12);
  EXPECT_THROW(subspace_distance(a, col({1, 0})), Error);
}

TEST(SubspaceDistanceProperty, AgreesWithTraceOracle) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Matrix a = oracle::gaussian(9, 1 + static_cast<Index>(seed % 3), 1300 + seed);
    const Matrix b = oracle::gaussian(9, 1 + static_cast<Index>((seed / 3) % 3), 1700 + seed);
    const double d = subspace_distance(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
    EXPECT_NEAR(d, oracle::subspace_distance(a, b), 1e-7);
  }
}

TEST(Orthonormalize, Examples) {
  const Matrix out = orthonormalize(2.0 * col({1, 0}));
  EXPECT_NEAR(std::abs(out(0, 0)), 1.0, 1e-14);
  Matrix m(2, 2);
  m << 1, 1, 0, 1;
  const Matrix q = orthonormalize(m);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LE(subspace_distance(m, q), 1e-10);
}
