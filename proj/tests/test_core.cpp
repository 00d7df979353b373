#include "prefk/core.hpp"

#include "support.hpp"

#include <random>

using namespace prefk;
using prefk::testing::kind_of;

TEST(Softmax, SymmetricScoresGiveUniform) {
  const auto d = softmax_distribution(make_vector({0.0, 0.0}));
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
}

TEST(Softmax, LogTwoOffsetGivesTwoThirds) {
  const auto d = softmax_distribution(make_vector({std::log(2.0), 0.0}));
  EXPECT_NEAR(d[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeScoresDoNotOverflow) {
  const auto d = softmax_distribution(make_vector({1000.0, 0.0}));
  EXPECT_NEAR(d[0], 1.0, 1e-15);
  EXPECT_GE(d[1], 0.0);
  EXPECT_LT(d[1], 1e-300);
}

TEST(Softmax, RejectsEmptyAndNonFinite) {
  EXPECT_EQ(kind_of([] { softmax_distribution(RealVector()); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { softmax_distribution(make_vector({1.0, std::nan("")})); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { softmax_distribution(make_vector({1.0, INFINITY})); }), ErrorKind::InvalidInput);
}

TEST(Softmax, SumsToOneAndStaysPositive) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 5.0);
  for (int t = 0; t < 500; ++t) {
    RealVector s(2 + t % 9);
    for (auto& v : s) v = n(rng);
    const RealVector p = softmax(s);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    EXPECT_TRUE((p.array() > 0.0).all());
  }
}

TEST(Softmax, ShiftInvariant) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int t = 0; t < 200; ++t) {
    RealVector s(5);
    for (auto& v : s) v = n(rng);
    const double k = n(rng) * 10.0;
    const RealVector a = softmax(s);
    const RealVector b = softmax((s.array() + k).matrix());
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Distribution, RenormalizesWithinTolerance) {
  const ProbabilityDistribution d(make_vector({0.5, 0.5 + 5e-10}));
  EXPECT_NEAR(d.probs().sum(), 1.0, 1e-15);
}

TEST(Distribution, RejectsBadMass) {
  EXPECT_EQ(kind_of([] { ProbabilityDistribution(make_vector({0.5, 0.6})); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { ProbabilityDistribution(make_vector({1.2, -0.2})); }), ErrorKind::InvalidInput);
  EXPECT_EQ(kind_of([] { ProbabilityDistribution(make_vector({1.0})); }), ErrorKind::InvalidInput);
}

TEST(Eigvals, IdentityAndDiagonal) {
  const RealVector a = sym_spd_eigvals(RealMatrix::Identity(3, 3));
  EXPECT_TRUE(a.isApprox(RealVector::Ones(3)));
  RealMatrix d = RealMatrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  const RealVector b = sym_spd_eigvals(d);
  EXPECT_DOUBLE_EQ(b(0), 4.0);
  EXPECT_DOUBLE_EQ(b(1), 1.0);
}

TEST(Eigvals, TwoByTwoByHand) {
  RealMatrix m(2, 2);
  m << 2, 1, 1, 2;
  const RealVector ev = sym_spd_eigvals(m);
  EXPECT_NEAR(ev(0), 3.0, 1e-12);
  EXPECT_NEAR(ev(1), 1.0, 1e-12);
}

TEST(Eigvals, RejectsNonSquareAndAsymmetric) {
  EXPECT_EQ(kind_of([] { sym_spd_eigvals(RealMatrix::Ones(2, 3)); }), ErrorKind::InvalidInput);
  RealMatrix m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_EQ(kind_of([&] { sym_spd_eigvals(m); }), ErrorKind::InvalidInput);
}

TEST(Eigvals, RecoversSpectrumOfRotatedDiagonal) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int t = 0; t < 50; ++t) {
    const int dim = 2 + t % 6;
    RealMatrix g(dim, dim);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = n(rng);
    const RealMatrix q = Eigen::HouseholderQR<RealMatrix>(g).householderQ();
    RealVector diag(dim);
    for (auto& v : diag) v = u(rng);
    const RealMatrix m = q * diag.asDiagonal() * q.transpose();
    std::sort(diag.begin(), diag.end(), std::greater<>());
    const RealVector ev = sym_spd_eigvals(0.5 * (m + m.transpose()));
    EXPECT_LE((ev - diag).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SolveSpd, IdentityAndDiagonal) {
  const RealVector a = solve_spd(RealMatrix::Identity(2, 2), make_vector({1.0, 2.0}));
  EXPECT_NEAR(a(0), 1.0, 1e-15);
  EXPECT_NEAR(a(1), 2.0, 1e-15);
  RealMatrix d = RealMatrix::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 4.0;
  const RealVector b = solve_spd(d, make_vector({2.0, 4.0}));
  EXPECT_NEAR(b(0), 1.0, 1e-15);
  EXPECT_NEAR(b(1), 1.0, 1e-15);
}

TEST(SolveSpd, SingularMatrixRejected) {
  RealMatrix m(2, 2);
  m << 1, 1, 1, 1;
  EXPECT_EQ(kind_of([&] { solve_spd(m, make_vector({1.0, 0.0})); }), ErrorKind::SingularMatrix);
}

TEST(SolveSpd, ResidualIsSmall) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    RealMatrix a(4, 4);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = n(rng);
    const RealMatrix sigma = a * a.transpose() + 0.5 * RealMatrix::Identity(4, 4);
    RealVector v(4);
    for (auto& x : v) x = n(rng);
    const RealVector x = solve_spd(sigma, v);
    EXPECT_LE((sigma * x - v).norm(), 1e-8 * v.norm());
  }
}
