#include <gtest/gtest.h>

#include <cmath>

#include "mtp2/errors.hpp"
#include "mtp2/losses.hpp"
#include "mtp2/matcore.hpp"
#include "mtp2/mmle.hpp"
#include "mtp2/models.hpp"

using mtp2::SymmetricMatrix;

namespace {

bool m_matrix(const SymmetricMatrix& m) { return mtp2::is_m_matrix(m, 0.0, 1e-12).is_m_matrix; }

}  // namespace

TEST(DiagonalModel, Examples) {
  const std::vector<double> ones(4, 1.0);
  EXPECT_EQ(mtp2::diagonal_model(ones), SymmetricMatrix::identity(4));
  const std::vector<double> d{2, 0.5};
  EXPECT_EQ(mtp2::diagonal_model(d), SymmetricMatrix::from_rows({{2, 0}, {0, 0.5}}));
  EXPECT_EQ(mtp2::gamma_of_model(mtp2::DiagonalSpec{d}).value, 1.0);
  const std::vector<double> bad{1, 0};
  EXPECT_THROW(mtp2::diagonal_model(bad), mtp2::NonpositiveEntry);
}

TEST(Equicorrelation, Examples) {
  EXPECT_EQ(mtp2::equicorrelation(5, 0), SymmetricMatrix::identity(5));
  const SymmetricMatrix a = mtp2::equicorrelation(3, -0.25);
  EXPECT_DOUBLE_EQ(a.l1_norm(), 4.5);
  EXPECT_DOUBLE_EQ(a.trace(), 3.0);
  EXPECT_THROW(mtp2::equicorrelation(3, -0.5 - 1e-9), mtp2::OutOfPsdRange);
  EXPECT_NO_THROW(mtp2::equicorrelation(3, -0.5));
  EXPECT_THROW(mtp2::equicorrelation(3, 1.01), mtp2::OutOfPsdRange);
}

TEST(Equicorrelation, ClosedFormSpectrum) {
  for (std::size_t p : {2u, 3u, 10u, 57u, 100u})
    for (double x : {-0.9 / (p - 1.0), -0.1 / (p - 1.0), 0.3, 0.95}) {
      const auto ev = mtp2::sym_eigenvalues(mtp2::equicorrelation(p, x));
      const double small = std::min(1 - x, 1 + (p - 1) * x);
      const double large = std::max(1 - x, 1 + (p - 1) * x);
      for (double v : ev)
        EXPECT_TRUE(std::abs(v - small) <= 1e-8 || std::abs(v - large) <= 1e-8) << "p=" << p << " x=" << x;
      EXPECT_NEAR(ev.front(), small, 1e-8);
      EXPECT_NEAR(ev.back(), large, 1e-8);
    }
}

TEST(Equicorrelation, DiagonalDominanceBoundIsTightAtTheEdge) {
  for (std::size_t p = 2; p <= 50; ++p) {
    const SymmetricMatrix a = mtp2::equicorrelation(p, -1.0 / (p - 1.0));
    EXPECT_NEAR(a.l1_norm(), 2 * a.trace(), 1e-9) << "p=" << p;
    EXPECT_TRUE(mtp2::is_m_matrix(a, 0, 1e-10).is_m_matrix);
  }
}

TEST(CaiBlock, SmallExampleSpectrum) {
  const mtp2::BinaryPattern eye{2, 2, {1, 0, 0, 1}};
  const SymmetricMatrix theta = mtp2::cai_block_from_pattern(eye, -0.1, {});
  const auto ev = mtp2::sym_eigenvalues(theta);
  EXPECT_NEAR(ev[0], 0.9, 1e-12);
  EXPECT_NEAR(ev[1], 0.9, 1e-12);
  EXPECT_NEAR(ev[2], 1.1, 1e-12);
  EXPECT_NEAR(ev[3], 1.1, 1e-12);

  const auto check = mtp2::neumann_correlation_bound(theta, 1, -0.1);
  EXPECT_NEAR(check.bound, 0.2 / 0.96, 1e-12);
  EXPECT_NEAR(check.bound, 0.208333, 1e-6);
  EXPECT_TRUE(check.holds);
}

TEST(CaiBlock, ZeroMaskGivesIdentity) {
  const std::vector<int> zeros(3, 0);
  const SymmetricMatrix theta = mtp2::cai_block(6, 1, -0.2, zeros, 1);
  EXPECT_EQ(theta, SymmetricMatrix::identity(6));
  const auto check = mtp2::neumann_correlation_bound(theta, 1, -0.2);
  EXPECT_EQ(check.max_corr, 0.0);
  EXPECT_TRUE(check.holds);
}

TEST(CaiBlock, PatternDegreeAudit) {
  for (std::uint64_t seed = 0; seed < 30; ++seed)
    for (std::size_t k : {1u, 2u, 3u}) {
      const mtp2::BinaryPattern a = mtp2::cai_pattern(10, 9, k, seed);
      for (std::size_t r = 0; r < a.rows; ++r) EXPECT_EQ(a.row_count(r), k);
      for (std::size_t c = 0; c < a.cols; ++c) EXPECT_LE(a.col_count(c), 2 * k);
    }
  EXPECT_THROW(mtp2::cai_pattern(3, 2, 3, 0), mtp2::InfeasiblePattern);
}

TEST(CaiBlock, ValidDrawsAreDominantMMatricesWithBoundedSpectrum) {
  for (std::size_t p : {4u, 9u, 20u, 60u})
    for (std::size_t k : {1u, 2u})
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const double eps = -0.45 / (2.0 * k);
        const SymmetricMatrix theta = mtp2::cai_block(p, k, eps, {}, seed);
        EXPECT_TRUE(m_matrix(theta));
        for (std::size_t j = 0; j < p; ++j) {
          double off = 0;
          for (std::size_t l = 0; l < p; ++l)
            if (l != j) off += std::abs(theta(j, l));
          EXPECT_LE(off, 2.0 * k * std::abs(eps) + 1e-15);
          EXPECT_LT(off, theta(j, j));
        }
        const auto ev = mtp2::sym_eigenvalues(theta);
        EXPECT_GE(ev.front(), 0.0);
        EXPECT_LE(ev.back(), 2.0);
        EXPECT_TRUE(mtp2::neumann_correlation_bound(theta, k, eps).holds) << "p=" << p << " seed=" << seed;
      }
}

TEST(CaiBlock, GammaConditionHolds) {
  // 4k|eps| <= min(1 - 1/gamma, 1/2) implies gamma(Sigma) <= gamma.
  const double target = 1.5;
  const std::size_t k = 2;
  const double eps = -std::min(1 - 1 / target, 0.5) / (4.0 * k);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const mtp2::CaiBlockSpec spec{30, k, eps, {}, seed};
    EXPECT_LE(mtp2::gamma_of_model(spec).value, target);
  }
}

TEST(CaiBlock, InvalidParameters) {
  EXPECT_THROW(mtp2::cai_block(6, 1, 0.1, {}, 0), mtp2::InvalidEps);
  EXPECT_THROW(mtp2::cai_block(6, 1, -0.5, {}, 0), mtp2::InvalidEps);
  EXPECT_THROW(mtp2::cai_block(6, 4, -0.01, {}, 0), mtp2::InfeasiblePattern);
}

TEST(RandomLaplacian, Examples) {
  EXPECT_EQ(mtp2::random_laplacian_mmatrix(5, 0.0, 0.1, 1.0, 2.0, 3), 2.0 * SymmetricMatrix::identity(5));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SymmetricMatrix l = mtp2::random_laplacian_mmatrix(15, 0.3, 0.1, 1.0, 1.0, seed);
    EXPECT_TRUE(m_matrix(l));
    // Row sums equal delta.
    for (std::size_t j = 0; j < 15; ++j) {
      double sum = 0;
      for (std::size_t k = 0; k < 15; ++k) sum += l(j, k);
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(mtp2::random_laplacian_mmatrix(10, 0.5, 0.1, 1.0, 1.0, 4),
            mtp2::random_laplacian_mmatrix(10, 0.5, 0.1, 1.0, 1.0, 4));
}

TEST(ModelSpec, JsonRoundTrip) {
  const std::vector<mtp2::ModelSpec> specs{
      mtp2::DiagonalSpec{{1, 2, 3}},
      mtp2::EquicorrelationSpec{5, -0.1},
      mtp2::CaiBlockSpec{8, 2, -0.1, {1, 0, 1, 1}, 9},
      mtp2::RandomLaplacianSpec{12, 0.2, 0.3, 0.9, 1.5, 4},
  };
  for (const auto& spec : specs) {
    const mtp2::ModelSpec back = mtp2::parse_model_spec(mtp2::model_spec_to_json(spec));
    EXPECT_EQ(mtp2::model_kind(back), mtp2::model_kind(spec));
    EXPECT_EQ(mtp2::build_model(back), mtp2::build_model(spec));
  }
  const auto eq = mtp2::parse_model_spec(R"({"kind":"equicorrelation","p":5,"x":-0.1})");
  EXPECT_EQ(mtp2::build_model(eq), mtp2::equicorrelation(5, -0.1));
  EXPECT_THROW(mtp2::parse_model_spec(R"({"kind":"banana"})"), mtp2::ParseError);
  EXPECT_THROW(mtp2::parse_model_spec("{"), mtp2::ParseError);
}

TEST(ModelSpec, WithDimResizes) {
  const mtp2::ModelSpec d = mtp2::with_dim(mtp2::DiagonalSpec{{1, 2}}, 5);
  EXPECT_EQ(mtp2::model_dim(d), 5u);
  EXPECT_EQ(mtp2::build_model(d).diag(), (std::vector<double>{1, 2, 1, 2, 1}));
  EXPECT_EQ(mtp2::model_dim(mtp2::with_dim(mtp2::EquicorrelationSpec{0, -0.01}, 30)), 30u);
}
