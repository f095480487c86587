#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spatialecon/autocorr.hpp"

using namespace spatialecon;

namespace {

SpatialWeights rook_weights(int rows, int cols, bool standardize) {
  const auto pts = oracle::grid(rows, cols);
  auto w = transform(build_distance_matrix(pts, Metric::euclidean), {WeightsKind::connectivity, 1.0, {}});
  return standardize ? row_standardize(w) : w;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::invalid_input;
}

}  // namespace

TEST(GlobalMoran, CheckerboardIsMinusOne) {
  const auto w = rook_weights(4, 4, true);
  const auto y = oracle::checkerboard(4, 4);
  EXPECT_NEAR(global_moran(y, w).statistic, -1.0, 1e-12);
  EXPECT_NEAR(oracle::moran(y, w.values()), -1.0, 1e-12);
  const Eigen::VectorXd local = local_moran(y, w);
  for (Eigen::Index i = 0; i < local.size(); ++i) EXPECT_NEAR(local(i), -1.0, 1e-12);
}

TEST(GlobalMoran, MatchesBruteForce) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pts = oracle::random_points(40, 10.0, gen);
    const auto w = transform(build_distance_matrix(pts, Metric::euclidean), {WeightsKind::inverse_distance, {}, 1.0});
    const Eigen::VectorXd y = oracle::random_normal(40, gen);
    EXPECT_NEAR(global_moran(y, w).statistic, oracle::moran(y, w.values()), 1e-12);
    EXPECT_NEAR(global_moran(y, w).s0, w.values().sum(), 1e-9);
    EXPECT_LT((local_moran(y, w) - oracle::local_moran(y, w.values())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GlobalMoran, RelabellingInvariance) {
  std::mt19937_64 gen(4);
  const auto w = rook_weights(5, 6, true);
  const Eigen::VectorXd y = oracle::random_normal(30, gen);
  std::vector<int> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  Eigen::MatrixXd wp(30, 30);
  Eigen::VectorXd yp(30);
  for (int i = 0; i < 30; ++i) {
    yp(i) = y(perm[i]);
    for (int j = 0; j < 30; ++j) wp(i, j) = w(perm[i], perm[j]);
  }
  EXPECT_NEAR(global_moran(yp, SpatialWeights::from_matrix(wp)).statistic, global_moran(y, w).statistic, 1e-12);
}

TEST(GlobalMoran, AffineInvariance) {
  std::mt19937_64 gen(5);
  const auto w = rook_weights(6, 6, true);
  for (int rep = 0; rep < 20; ++rep) {
    const Eigen::VectorXd y = oracle::random_normal(36, gen);
    const double a = rep % 2 == 0 ? 3.7 : -0.02;
    const Eigen::VectorXd t = (a * y).array() + 1234.5;
    const double i0 = global_moran(y, w).statistic;
    EXPECT_NEAR(global_moran(t, w).statistic, i0, 1e-10 * std::max(1.0, std::abs(i0)));
    const Eigen::VectorXd l0 = local_moran(y, w) / (y.array() - y.mean()).square().mean();
    const Eigen::VectorXd l1 = local_moran(t, w) / (t.array() - t.mean()).square().mean();
    EXPECT_LT((l0 - l1).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, l0.cwiseAbs().maxCoeff()));
  }
}

TEST(GlobalMoran, Errors) {
  const auto w = rook_weights(3, 3, true);
  EXPECT_EQ(kind_of([&] { global_moran(Eigen::VectorXd::Constant(9, 2.0), w); }), ErrorKind::zero_variance);
  EXPECT_EQ(kind_of([&] { global_moran(Eigen::VectorXd::LinSpaced(9, 0, 1), SpatialWeights::from_matrix(Eigen::MatrixXd::Zero(9, 9))); }),
            ErrorKind::empty_weights);
  EXPECT_THROW(global_moran(Eigen::VectorXd::LinSpaced(8, 0, 1), w), InputError);
  EXPECT_EQ(kind_of([&] { global_moran(Eigen::Vector2d(1, 2), SpatialWeights::from_matrix(Eigen::Matrix2d{{0, 1}, {1, 0}})); }),
            ErrorKind::too_few_observations);
}

TEST(MoranMoments, ExpectationIsMinusOneOverNMinusOne) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(5, 5);
  m.diagonal().setZero();
  const auto mo = moran_moments(SpatialWeights::from_matrix(m), 5);
  EXPECT_EQ(mo.expected, -0.25);
  EXPECT_EQ(kind_of([&] { moran_moments(SpatialWeights::from_matrix(Eigen::Matrix3d{{0, 1, 0}, {1, 0, 1}, {0, 1, 0}}), 3); }),
            ErrorKind::sample_too_small);
}

TEST(MoranMoments, VarianceMatchesTextbookLoops) {
  const auto w = rook_weights(5, 5, false);
  const double v = moran_moments(w, 25).variance;
  EXPECT_GT(v, 0.0);
  EXPECT_NEAR(v, oracle::moran_variance_normal(w.values()), 1e-10);

  std::mt19937_64 gen(8);
  const auto pts = oracle::random_points(60, 10.0, gen);
  const auto idw = row_standardize(
      transform(build_distance_matrix(pts, Metric::manhattan), {WeightsKind::inverse_distance_thresholded, 4.0, 2.0}));
  EXPECT_NEAR(moran_moments(idw, 60).variance, oracle::moran_variance_normal(idw.values()), 1e-12);
}

TEST(MoranMoments, PermutationMeanWithinThreeStandardErrors) {
  std::mt19937_64 gen(9);
  const auto w = rook_weights(7, 8, true);
  const Eigen::VectorXd y = oracle::random_normal(56, gen);
  const auto emp = oracle::permutation_moments(y, w.values(), 20000, 42);
  const auto mo = moran_moments(w, 56);
  EXPECT_LT(std::abs(emp.mean - mo.expected), 3.0 * emp.se_of_mean);
  EXPECT_LT(std::abs(emp.variance / mo.variance - 1.0), 0.1);
}

TEST(MoranTest, ZeroZGivesUnitPValue) {
  EXPECT_EQ(normal_p_value(0.0, Alternative::two_sided), 1.0);
  EXPECT_EQ(normal_p_value(0.0, Alternative::greater), 0.5);
  EXPECT_NEAR(normal_p_value(1.959963984540054, Alternative::two_sided), 0.05, 1e-12);
  EXPECT_NEAR(normal_p_value(1.6448536269514722, Alternative::greater), 0.05, 1e-12);
  EXPECT_NEAR(normal_p_value(-1.6448536269514722, Alternative::less), 0.05, 1e-12);
}

TEST(MoranTest, ReportFields) {
  const auto w = rook_weights(4, 4, true);
  const auto r = moran_test(oracle::checkerboard(4, 4), w, Alternative::less);
  EXPECT_NEAR(r.statistic, -1.0, 1e-12);
  EXPECT_EQ(r.expected, -1.0 / 15.0);
  EXPECT_NEAR(r.z, (r.statistic - r.expected) / std::sqrt(r.variance), 1e-12);
  EXPECT_LT(r.p_value, 1e-4);
  EXPECT_EQ(r.n, 16u);
  EXPECT_NEAR(r.s0, 16.0, 1e-12);
  EXPECT_EQ(moran_test(oracle::checkerboard(4, 4), w, Alternative::greater).p_value, 1.0 - r.p_value);
}

TEST(LocalMoran, SumIdentity) {
  std::mt19937_64 gen(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto pts = oracle::random_points(30, 10.0, gen);
    auto w = transform(build_distance_matrix(pts, Metric::euclidean), {WeightsKind::gaussian, 3.0, {}});
    if (rep % 2 == 0) w = row_standardize(w);
    const Eigen::VectorXd y = oracle::random_normal(30, gen).array().exp();
    const auto g = global_moran(y, w);
    const double ss = (y.array() - y.mean()).square().sum();
    const double lhs = local_moran(y, w).sum();
    const double rhs = g.statistic * g.s0 * ss / 30.0;
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::abs(rhs));
  }
}

TEST(LocalMoran, IsolateIsZero) {
  Eigen::MatrixXd m = oracle::rook(3, 3);
  m.row(4).setZero();
  m.col(4).setZero();
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(9, 1, 9);
  EXPECT_EQ(local_moran(y, SpatialWeights::from_matrix(m))(4), 0.0);
}

TEST(Lisa, IsolateNotTestable) {
  Eigen::MatrixXd m = oracle::rook(3, 3);
  m.row(4).setZero();
  m.col(4).setZero();
  const auto w = row_standardize(SpatialWeights::from_matrix(m));
  const auto r = lisa_test(Eigen::VectorXd::LinSpaced(9, 1, 9).array().square(), w, 0.05, false);
  EXPECT_EQ(r.sites[4].expected, 0.0);
  EXPECT_FALSE(r.sites[4].testable);
  EXPECT_FALSE(r.sites[4].significant);
  ASSERT_EQ(r.non_testable.size(), 1u);
  EXPECT_EQ(r.non_testable[0], 4u);
  EXPECT_TRUE(r.sites[0].testable);
}

TEST(Lisa, BonferroniThreshold) {
  std::mt19937_64 gen(13);
  const auto w = rook_weights(5, 10, true);
  const Eigen::VectorXd y = oracle::random_normal(50, gen);
  const auto plain = lisa_test(y, w, 0.05, false);
  const auto bonf = lisa_test(y, w, 0.05, true);
  EXPECT_EQ(plain.threshold, 0.05);
  EXPECT_DOUBLE_EQ(bonf.threshold, 0.001);
  for (std::size_t i = 0; i < 50; ++i) {
    EXPECT_EQ(bonf.sites[i].significant, bonf.sites[i].p_value < 0.001);
    EXPECT_EQ(plain.sites[i].significant, plain.sites[i].p_value < 0.05);
    EXPECT_EQ(plain.sites[i].p_value, bonf.sites[i].p_value);
  }
  EXPECT_FALSE(LisaReport::caveat.empty());
  EXPECT_THROW(lisa_test(y, w, 0.0, false), InputError);
  EXPECT_EQ(kind_of([&] { lisa_test(Eigen::Vector3d(1, 2, 4), SpatialWeights::from_matrix(oracle::rook(1, 3)), 0.05, false); }),
            ErrorKind::sample_too_small);
}

TEST(Lisa, RecordsAreConsistent) {
  std::mt19937_64 gen(14);
  const auto w = rook_weights(6, 6, true);
  const Eigen::VectorXd y = oracle::random_normal(36, gen);
  const auto r = lisa_test(y, w, 0.05, false);
  const Eigen::VectorXd local = local_moran(y, w);
  const double m2 = (y.array() - y.mean()).square().mean();
  EXPECT_NEAR(r.m2, m2, 1e-14);
  for (std::size_t i = 0; i < 36; ++i) {
    const auto& s = r.sites[i];
    EXPECT_EQ(s.value, local(static_cast<Eigen::Index>(i)));
    EXPECT_NEAR(s.scaled, s.value / m2, 1e-14);
    EXPECT_NEAR(s.expected, -1.0 / 35.0, 1e-15);
    EXPECT_GT(s.variance, 0.0);
    EXPECT_NEAR(s.z, (s.scaled - s.expected) / std::sqrt(s.variance), 1e-12);
  }
}

// Mean and variance of I_i / m2 under random relabelling of all values.
TEST(Lisa, MomentsMatchRandomizationOracle) {
  std::mt19937_64 gen(15);
  const auto pts = oracle::random_points(40, 10.0, gen);
  const auto w = row_standardize(
      transform(build_distance_matrix(pts, Metric::euclidean), {WeightsKind::inverse_distance_thresholded, 4.0, 1.0}));
  const Eigen::VectorXd y = oracle::random_normal(40, gen).array().exp();  // skewed, kurtosis far from 3
  const auto r = lisa_test(y, w, 0.05, false);
  for (Eigen::Index site : {0, 7, 19, 33}) {
    const auto& s = r.sites[static_cast<std::size_t>(site)];
    if (!s.testable) continue;
    const auto emp = oracle::local_permutation_moments(y, w.values(), site, 200000, 100u + static_cast<unsigned>(site));
    EXPECT_LT(std::abs(emp.mean - s.expected), 3.0 * emp.se_of_mean) << "site " << site;
    EXPECT_LT(std::abs(emp.variance / s.variance - 1.0), 0.05) << "site " << site;
  }
}

TEST(Permutation, RequiresEnoughDraws) {
  const auto w = rook_weights(4, 4, true);
  EXPECT_EQ(kind_of([&] { permutation_test(oracle::checkerboard(4, 4), w, Statistic::global, 998, 1); }),
            ErrorKind::insufficient_draws);
}

TEST(Permutation, CheckerboardIsExtreme) {
  const auto w = rook_weights(4, 4, true);
  const auto r = permutation_test(oracle::checkerboard(4, 4), w, Statistic::global, 999, 2024, Alternative::less);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_LE(r.entries[0].p_value, 0.002);
  EXPECT_NEAR(r.entries[0].observed, -1.0, 1e-12);
}

TEST(Permutation, DeterministicForFixedSeed) {
  std::mt19937_64 gen(16);
  const auto w = rook_weights(5, 5, true);
  const Eigen::VectorXd y = oracle::random_normal(25, gen);
  for (auto st : {Statistic::global, Statistic::local}) {
    const auto a = permutation_test(y, w, st, 999, 77);
    const auto b = permutation_test(y, w, st, 999, 77);
    const auto c = permutation_test(y, w, st, 999, 78);
    ASSERT_EQ(a.entries.size(), b.entries.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      EXPECT_EQ(a.entries[i].p_value, b.entries[i].p_value);
      EXPECT_EQ(a.entries[i].mean, b.entries[i].mean);
      EXPECT_EQ(a.entries[i].sd, b.entries[i].sd);
      differs = differs || a.entries[i].mean != c.entries[i].mean;
    }
    EXPECT_TRUE(differs);
  }
}

TEST(Permutation, GlobalMeanMatchesExpectation) {
  std::mt19937_64 gen(17);
  const auto w = rook_weights(8, 8, true);
  const Eigen::VectorXd y = oracle::random_normal(64, gen);
  const auto r = permutation_test(y, w, Statistic::global, 20000, 5);
  const auto& e = r.entries[0];
  EXPECT_LT(std::abs(e.mean + 1.0 / 63.0), 3.0 * e.sd / std::sqrt(20000.0));
  EXPECT_EQ(e.centre, -1.0 / 63.0);
}

// Holding y_i fixed, the mean of I_i over permutations of the other values is
// -(y_i - mean)^2 w_i. / (N - 1).
TEST(Permutation, LocalConditionalMean) {
  std::mt19937_64 gen(18);
  const auto w = rook_weights(6, 7, true);
  const Eigen::VectorXd y = oracle::random_normal(42, gen);
  const auto r = permutation_test(y, w, Statistic::local, 20000, 9);
  const Eigen::VectorXd z = y.array() - y.mean();
  ASSERT_EQ(r.entries.size(), 42u);
  int outside = 0;
  for (Eigen::Index i = 0; i < 42; ++i) {
    const auto& e = r.entries[static_cast<std::size_t>(i)];
    const double exact = -z(i) * z(i) * w.values().row(i).sum() / 41.0;
    EXPECT_NEAR(e.centre, exact, 1e-15);
    if (std::abs(e.mean - exact) > 3.0 * e.sd / std::sqrt(20000.0)) ++outside;
  }
  EXPECT_LE(outside, 2);
}

TEST(Permutation, PseudoPValuesRoughlyUniformUnderNull) {
  const auto w = rook_weights(5, 5, true);
  std::mt19937_64 gen(19);
  const int reps = 300;
  int below_05 = 0;
  double sum = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    const Eigen::VectorXd y = oracle::random_normal(25, gen);
    const double p = permutation_test(y, w, Statistic::global, 999, static_cast<std::uint64_t>(rep)).entries[0].p_value;
    sum += p;
    below_05 += p <= 0.05 ? 1 : 0;
  }
  EXPECT_NEAR(sum / reps, 0.5, 0.05);
  EXPECT_LT(below_05, 30);
  EXPECT_GT(below_05, 4);
}

TEST(Permutation, AgreesWithNormalApproximation) {
  const auto w = rook_weights(10, 10, false);
  std::mt19937_64 gen(20);
  for (int rep = 0; rep < 3; ++rep) {
    Eigen::VectorXd y = oracle::random_normal(100, gen);
    y += 0.15 * (w.values() * y);  // mild clustering to land away from p = 1
    const auto z = moran_test(y, w, Alternative::two_sided);
    const auto perm = permutation_test(y, w, Statistic::global, 9999, 300 + static_cast<std::uint64_t>(rep));
    EXPECT_NEAR(perm.entries[0].p_value, z.p_value, 0.03);
  }
}
