#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mtp2/errors.hpp"
#include "mtp2/matcore.hpp"
#include "mtp2/models.hpp"
#include "oracles.hpp"

using mtp2::SymmetricMatrix;

namespace {

SymmetricMatrix m2(double a, double b, double d) { return SymmetricMatrix::from_rows({{a, b}, {b, d}}); }

}  // namespace

TEST(Cholesky, IdentityFactorIsIdentity) {
  const auto f = mtp2::cholesky(SymmetricMatrix::identity(3));
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(f(j, k), j == k ? 1.0 : 0.0);
}

TEST(Cholesky, TwoByTwoByHand) {
  const auto f = mtp2::cholesky(m2(4, 2, 5));
  EXPECT_DOUBLE_EQ(f(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(f(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(f(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(f(1, 1), 2.0);
}

TEST(Cholesky, IndefiniteReportsFailingPivot) {
  try {
    mtp2::cholesky(m2(1, 2, 1));
    FAIL() << "expected NotPositiveDefinite";
  } catch (const mtp2::NotPositiveDefinite& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  EXPECT_FALSE(mtp2::is_positive_definite(m2(1, 2, 1)));
}

TEST(Cholesky, PivotFloorRejectsNearSingular) {
  EXPECT_THROW(mtp2::cholesky(m2(1, 1, 1)), mtp2::NotPositiveDefinite);
  EXPECT_THROW(mtp2::cholesky(m2(1, 1, 1 + 1e-14)), mtp2::NotPositiveDefinite);
}

TEST(Cholesky, ReconstructsRandomSpd) {
  oracle::TestRng rng(1);
  for (std::size_t p : {1u, 2u, 7u, 30u, 50u}) {
    const SymmetricMatrix m = oracle::random_spd(p, rng);
    const SymmetricMatrix back = mtp2::cholesky(m).reconstruct();
    EXPECT_LE(mtp2::max_abs_diff(back, m), 1e-10 * m.max_abs()) << "p=" << p;
  }
}

TEST(LogDet, ExamplesByHand) {
  EXPECT_NEAR(mtp2::log_det(mtp2::cholesky(SymmetricMatrix::identity(5))), 0.0, 1e-15);
  EXPECT_NEAR(mtp2::log_det(mtp2::cholesky(m2(2, 0, 2))), 2.0 * std::log(2.0), 1e-12);
  EXPECT_NEAR(mtp2::log_det(mtp2::cholesky(m2(4, 2, 5))), std::log(16.0), 1e-12);
}

TEST(LogDet, AgreesWithGaussJordan) {
  oracle::TestRng rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const SymmetricMatrix m = oracle::random_spd(12, rng);
    const double ref = oracle::log_det(m);
    EXPECT_NEAR(mtp2::log_det(mtp2::cholesky(m)), ref, 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST(InversePsd, Examples) {
  EXPECT_EQ(mtp2::inverse_psd(mtp2::cholesky(SymmetricMatrix::identity(4))), SymmetricMatrix::identity(4));
  const SymmetricMatrix d = mtp2::inverse_psd(mtp2::cholesky(m2(2, 0, 4)));
  EXPECT_DOUBLE_EQ(d(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(d(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(d(0, 1), 0.0);
  const SymmetricMatrix inv = mtp2::inverse_psd(mtp2::cholesky(m2(4, 2, 5)));
  EXPECT_NEAR(inv(0, 0), 5.0 / 16, 1e-15);
  EXPECT_NEAR(inv(0, 1), -2.0 / 16, 1e-15);
  EXPECT_NEAR(inv(1, 1), 4.0 / 16, 1e-15);
}

TEST(InversePsd, MatchesGaussJordan) {
  oracle::TestRng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const SymmetricMatrix m = oracle::random_spd(20, rng);
    const SymmetricMatrix ref = oracle::inverse(m);
    EXPECT_LE(mtp2::max_abs_diff(mtp2::inverse_psd(mtp2::cholesky(m)), ref), 1e-9 * ref.max_abs());
  }
}

TEST(SymEigen, Examples) {
  const std::vector<double> d{3, 1, 2};
  auto ev = mtp2::sym_eigenvalues(SymmetricMatrix::diagonal(d));
  ASSERT_EQ(ev.size(), 3u);
  EXPECT_NEAR(ev[0], 1, 1e-14);
  EXPECT_NEAR(ev[1], 2, 1e-14);
  EXPECT_NEAR(ev[2], 3, 1e-14);

  ev = mtp2::sym_eigenvalues(mtp2::equicorrelation(3, -0.25));
  EXPECT_NEAR(ev[0], 0.5, 1e-12);
  EXPECT_NEAR(ev[1], 1.25, 1e-12);
  EXPECT_NEAR(ev[2], 1.25, 1e-12);

  ev = mtp2::sym_eigenvalues(m2(0, 1, 0));
  EXPECT_NEAR(ev[0], -1, 1e-14);
  EXPECT_NEAR(ev[1], 1, 1e-14);
}

TEST(SymEigen, ReconstructsAndIsOrthonormal) {
  oracle::TestRng rng(4);
  const SymmetricMatrix m = oracle::random_spd(25, rng);
  const auto d = mtp2::sym_eigen(m);
  EXPECT_LE(mtp2::max_abs_diff(d.reconstruct(), m), 1e-10 * m.max_abs());
  for (std::size_t a = 0; a < 25; ++a)
    for (std::size_t b = 0; b < 25; ++b) {
      double dot = 0;
      for (std::size_t i = 0; i < 25; ++i) dot += d.eigenvectors(i, a) * d.eigenvectors(i, b);
      EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-12);
    }
}

TEST(SpectralFunction, SquareRootSquares) {
  oracle::TestRng rng(5);
  const SymmetricMatrix m = oracle::random_spd(8, rng);
  const SymmetricMatrix r = mtp2::spectral_function(mtp2::sym_eigen(m), [](double l) { return std::sqrt(l); });
  const SymmetricMatrix sq = SymmetricMatrix::from_matrix(r.to_matrix() * r.to_matrix());
  EXPECT_LE(mtp2::max_abs_diff(sq, m), 1e-10 * m.max_abs());
}

TEST(FrobeniusInner, Examples) {
  EXPECT_DOUBLE_EQ(mtp2::frobenius_inner(SymmetricMatrix::identity(3), SymmetricMatrix::identity(3)), 3.0);
  EXPECT_DOUBLE_EQ(mtp2::frobenius_inner(m2(1, 2, 1), m2(0, 1, 0)), 4.0);
  EXPECT_DOUBLE_EQ(mtp2::frobenius_inner(m2(1, 2, 1), SymmetricMatrix(2)), 0.0);
}

TEST(PositivePart, Examples) {
  EXPECT_EQ(mtp2::positive_part(m2(1, -0.3, 1)), SymmetricMatrix::identity(2));
  EXPECT_EQ(mtp2::positive_part(m2(1, 0.2, 3)), m2(1, 0.2, 3));
  EXPECT_EQ(mtp2::positive_part(m2(1, 0.2, -0.5)), m2(1, 0.2, 0));
}

TEST(Congruence, Examples) {
  const std::vector<double> ones{1, 1};
  EXPECT_EQ(mtp2::congruence(ones, m2(1, 0.3, 2)), m2(1, 0.3, 2));
  const std::vector<double> d{2, 1};
  EXPECT_EQ(mtp2::congruence(d, SymmetricMatrix::identity(2)), m2(4, 0, 1));
  const std::vector<double> ab{3, 5};
  EXPECT_EQ(mtp2::congruence(ab, m2(0, 1, 0)), m2(0, 15, 0));
}

TEST(Congruence, GeneralMatrixForm) {
  // P^T M P with P = [[1, 1], [0, 1]].
  const mtp2::Matrix p(2, {1, 1, 0, 1});
  const SymmetricMatrix out = mtp2::congruence(p, m2(2, 0, 3));
  EXPECT_DOUBLE_EQ(out(0, 0), 2);
  EXPECT_DOUBLE_EQ(out(0, 1), 2);
  EXPECT_DOUBLE_EQ(out(1, 1), 5);
}

TEST(SymmetricMatrix, RejectsGrossAsymmetryAndSymmetrizesTiny) {
  EXPECT_THROW(SymmetricMatrix::from_rows({{1, 0.5}, {0.4, 1}}), mtp2::AsymmetricInput);
  const SymmetricMatrix m = SymmetricMatrix::from_rows({{1, 0.5}, {0.5 + 1e-13, 1}});
  EXPECT_EQ(m(0, 1), m(1, 0));
  EXPECT_THROW(SymmetricMatrix::from_rows({{1, 0}, {0}}), mtp2::Error);
}

TEST(DenseCsv, RoundTripIsExact) {
  oracle::TestRng rng(6);
  const SymmetricMatrix m = oracle::random_spd(6, rng);
  std::stringstream ss;
  mtp2::write_dense_csv(ss, m);
  EXPECT_EQ(mtp2::read_dense_csv(ss), m);
}

TEST(DenseCsv, AcceptsScientificNotation) {
  std::istringstream in("2\n1e0, 2.5E-1\n0.25,4.0e+0\n");
  const SymmetricMatrix m = mtp2::read_dense_csv(in);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(m(1, 1), 4.0);
}

TEST(DenseCsv, MalformedInputThrows) {
  std::istringstream wrong_count("2\n1,0\n");
  EXPECT_THROW(mtp2::read_dense_csv(wrong_count), mtp2::Error);
  std::istringstream junk("2\n1,x\n0,1\n");
  EXPECT_THROW(mtp2::read_dense_csv(junk), mtp2::Error);
}

TEST(IdentityResidual, ZeroForExactInverse) {
  EXPECT_EQ(mtp2::identity_residual(m2(2, 0, 4), m2(0.5, 0, 0.25)), 0.0);
  EXPECT_DOUBLE_EQ(mtp2::identity_residual(SymmetricMatrix::identity(2), m2(1, 0.1, 1)), 0.1);
}
