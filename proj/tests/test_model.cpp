#include <gtest/gtest.h>

#include <cmath>

#include "nsmfm/model.hpp"
#include "nsmfm/rng.hpp"
#include "oracles.hpp"

using namespace nsmfm;

namespace {

DgpConfig small_config(std::uint64_t seed) {
  DgpConfig c;
  c.p1 = 6;
  c.p2 = 5;
  c.T = 30;
  c.ranks = {1, 1, 1, 1};
  c.seed = seed;
  return c;
}

bool same_matrix(const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols() && a == b; }

}  // namespace

TEST(Ranks, ParseAndValidate) {
  EXPECT_EQ(parse_ranks("2,1,3,1"), (Ranks{2, 1, 3, 1}));
  EXPECT_EQ(parse_ranks("2,1,3,1").to_string(), "2,1,3,1");
  EXPECT_THROW(parse_ranks("0,1,0,0"), Error);
  EXPECT_THROW(parse_ranks("1,1,1"), Error);
  EXPECT_THROW(parse_ranks("1,1,1,x"), Error);
  EXPECT_THROW(parse_ranks("-1,1,1,1"), Error);
  EXPECT_THROW((Ranks{3, 1, 0, 0}.validate_for(2, 5)), Error);
}

TEST(MatrixPanel, RejectsRaggedAndNonFinite) {
  EXPECT_THROW(MatrixPanel({Matrix::Zero(2, 2), Matrix::Zero(2, 3)}), Error);
  Matrix bad = Matrix::Zero(2, 2);
  bad(1, 1) = INFINITY;
  EXPECT_THROW(MatrixPanel({bad}), Error);
}

TEST(Simulate, SameSeedBitIdentical) {
  const Simulation a = simulate(small_config(5));
  const Simulation b = simulate(small_config(5));
  EXPECT_TRUE(a.panel == b.panel);
  const Simulation c = simulate(small_config(6));
  EXPECT_FALSE(a.panel == c.panel);
}

TEST(Simulate, LoadingSeedFixesLoadingsOnly) {
  DgpConfig a = small_config(1), b = small_config(2);
  a.loadingSeed = b.loadingSeed = 99;
  const Simulation sa = simulate(a), sb = simulate(b);
  EXPECT_TRUE(same_matrix(sa.truth.R1.matrix(), sb.truth.R1.matrix()));
  EXPECT_TRUE(same_matrix(sa.truth.C0.matrix(), sb.truth.C0.matrix()));
  EXPECT_FALSE(sa.panel == sb.panel);
}

TEST(Simulate, LoadingsWithinBounds) {
  DgpConfig c = small_config(3);
  c.a0 = 0.25;
  c.a1 = 4.0;
  const Simulation s = simulate(c);
  EXPECT_LE(s.truth.R0.matrix().cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(s.truth.C0.matrix().cwiseAbs().maxCoeff(), 0.25);
  EXPECT_LE(s.truth.R1.matrix().cwiseAbs().maxCoeff(), 4.0);
  EXPECT_GT(s.truth.R1.matrix().cwiseAbs().maxCoeff(), 0.25);
}

TEST(Simulate, ZeroSigmaRemovesStationaryComponent) {
  DgpConfig c = small_config(4);
  c.sigma0 = 0.0;
  const Simulation s = simulate(c);
  for (const Matrix& f : s.truth.F0.frames()) EXPECT_EQ(f.norm(), 0.0);
  TrueModel trendOnly = s.truth;
  trendOnly.R0 = Loadings::none(c.p1);
  trendOnly.C0 = Loadings::none(c.p2);
  trendOnly.F0 = FactorPath::zeros(0, 0, c.T);
  EXPECT_TRUE(assemble_panel(trendOnly) == s.panel);
}

TEST(Simulate, TrendVarianceGrowsLinearly) {
  const int reps = 2000;
  double sum10 = 0, sum50 = 0;
  for (int r = 0; r < reps; ++r) {
    DgpConfig c;
    c.p1 = 2;
    c.p2 = 2;
    c.T = 50;
    c.ranks = {1, 1, 0, 0};
    c.seed = combine_seed(17, {static_cast<std::uint64_t>(r)});
    const Simulation s = simulate(c);
    sum10 += s.truth.F1[9](0, 0) * s.truth.F1[9](0, 0);
    sum50 += s.truth.F1[49](0, 0) * s.truth.F1[49](0, 0);
  }
  EXPECT_NEAR(sum10 / reps / 10.0, 1.0, 0.10);
  EXPECT_NEAR(sum50 / reps / 50.0, 1.0, 0.10);
}

TEST(Simulate, InvalidConfigurations) {
  DgpConfig c = small_config(0);
  c.ranks = {7, 1, 0, 0};
  EXPECT_THROW(simulate(c), Error);
  c = small_config(0);
  c.T = 0;
  EXPECT_THROW(simulate(c), Error);
  c = small_config(0);
  c.sigma0 = -1;
  EXPECT_THROW(simulate(c), Error);
}

TEST(Assemble, AllBlocksEmptyGivesNoise) {
  TrueModel m;
  m.E = oracle::random_panel(3, 2, 4, 8);
  m.R1 = m.R0 = Loadings::none(3);
  m.C1 = m.C0 = Loadings::none(2);
  m.F1 = m.F0 = FactorPath::zeros(0, 0, 4);
  EXPECT_TRUE(assemble_panel(m) == m.E);
}

TEST(Assemble, HandComputedOuterProducts) {
  TrueModel m;
  m.E = MatrixPanel::zeros(2, 2, 1);
  Matrix r(2, 1), c(2, 1);
  r << 1, 2;
  c << 3, -1;
  m.R1 = Loadings(r);
  m.C1 = Loadings(c);
  m.R0 = Loadings::none(2);
  m.C0 = Loadings::none(2);
  m.F1 = FactorPath(1, 1, {Matrix::Constant(1, 1, 2.0)});
  m.F0 = FactorPath::zeros(0, 0, 1);
  Matrix expect(2, 2);
  expect << 6, -2, 12, -4;
  EXPECT_EQ(assemble_panel(m)[0], expect);
}

TEST(Assemble, RoundTripsSimulation) {
  const Simulation s = simulate(small_config(12));
  EXPECT_TRUE(assemble_panel(s.truth) == s.panel);
}

TEST(Difference, Examples) {
  const MatrixPanel constant({Matrix::Constant(2, 3, 4.0), Matrix::Constant(2, 3, 4.0), Matrix::Constant(2, 3, 4.0)});
  const MatrixPanel dc = difference_panel(constant);
  for (const Matrix& d : dc.frames()) EXPECT_EQ(d.norm(), 0.0);

  std::vector<Matrix> ramp;
  for (int t = 1; t <= 5; ++t) ramp.push_back(Matrix::Constant(2, 2, t));
  const MatrixPanel dr = difference_panel(MatrixPanel(ramp));
  EXPECT_EQ(dr.T(), 4);
  for (const Matrix& d : dr.frames()) EXPECT_EQ(d, Matrix::Constant(2, 2, 1.0));

  const MatrixPanel x = oracle::random_panel(3, 4, 6, 2);
  const MatrixPanel dx = difference_panel(x);
  for (Index t = 1; t < 6; ++t)
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 4; ++j) EXPECT_EQ(dx[t - 1](i, j), x[t](i, j) - x[t - 1](i, j));

  EXPECT_THROW(difference_panel(MatrixPanel({Matrix::Zero(1, 1)})), Error);
}

TEST(Seeds, CombineIsOrderSensitive) {
  EXPECT_NE(combine_seed(1, {2, 3}), combine_seed(1, {3, 2}));
  EXPECT_EQ(combine_seed(1, {2, 3}), combine_seed(1, {2, 3}));
  EXPECT_NE(substream_seed(1, stream::kTrend), substream_seed(1, stream::kNoise));
}
