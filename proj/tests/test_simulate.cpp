#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spatialecon/simulate.hpp"

using namespace spatialecon;

namespace {

const WeightsSpec kRook{WeightsKind::connectivity, 1.0, {}};

DgpSpec base(Family f) {
  DgpSpec d;
  d.family = f;
  d.layout = Lattice{6, 7, 1.0};
  d.seed = 5;
  if (lags_regressors(f)) d.gamma = Eigen::VectorXd::Constant(1, 0.5);
  return d;
}

}  // namespace

TEST(Rng, ReproducibleAndSeedSensitive) {
  Rng a(1), b(1), c(2);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  EXPECT_NE(Rng(1).normal(), c.normal());
  EXPECT_NE(derive_seed(7, 0), derive_seed(7, 1));
  EXPECT_NE(derive_seed(7, 0), derive_seed(8, 0));
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  std::vector<double> v(200000);
  for (auto& x : v) x = r.normal();
  const auto m = oracle::summarize(v);
  EXPECT_NEAR(m.mean, 0.0, 0.01);
  EXPECT_NEAR(m.variance, 1.0, 0.01);
}

TEST(Rng, BelowAndShuffle) {
  Rng r(4);
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) ++counts[static_cast<std::size_t>(r.below(5))];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  r.shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7}));
}

TEST(Generate, SarWithZeroRhoIsLinear) {
  auto d = base(Family::sar);
  d.rho = 0.0;
  d.beta = Eigen::Vector2d(1.0, 2.0);
  const auto s = generate(d, kRook, 1);
  auto d0 = d;
  d0.sigma = 1e-300;
  const auto s0 = generate(d0, kRook, 1);  // same X draws, errors scaled away
  const Eigen::VectorXd x = s.points.variable("x1");
  const Eigen::VectorXd y = s.points.variable("outcome");
  const Eigen::VectorXd eps = y - (1.0 + 2.0 * x.array()).matrix();
  EXPECT_TRUE(x == s0.points.variable("x1"));
  EXPECT_LT((s0.points.variable("outcome") - (1.0 + 2.0 * x.array()).matrix()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(eps.mean(), 0.0, 0.5);
}

TEST(Generate, SemNoiselessLimit) {
  auto d = base(Family::sem);
  d.lambda = 0.0;
  d.sigma = 1e-12;
  const auto s = generate(d, kRook, 1);
  const Eigen::VectorXd x = s.points.variable("x1");
  EXPECT_LT((s.points.variable("outcome") - (1.0 + 2.0 * x.array()).matrix()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Generate, FamilyEquations) {
  for (Family f : {Family::slx, Family::sar, Family::sem, Family::sdm}) {
    auto d = base(f);
    d.rho = lags_response(f) ? 0.5 : 0.0;
    d.lambda = f == Family::sem ? 0.6 : 0.0;
    auto quiet = d;
    quiet.sigma = 1e-300;
    const auto s = generate(d, kRook, 1);
    const auto q = generate(quiet, kRook, 1);
    const Eigen::MatrixXd& w = s.weights->values();
    const Eigen::VectorXd x = s.points.variable("x1");
    const Eigen::VectorXd y = s.points.variable("outcome");
    const Eigen::Index n = x.size();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd mean = (1.0 + 2.0 * x.array()).matrix();
    if (lags_regressors(f)) mean += 0.5 * (w * x);
    // errors recovered from the noisy draw: quiet run shares X but has no noise
    Eigen::VectorXd eps;
    switch (f) {
      case Family::slx: eps = y - mean; break;
      case Family::sar:
      case Family::sdm: eps = (id - 0.5 * w) * y - mean; break;
      case Family::sem: eps = (id - 0.6 * w) * (y - mean); break;
    }
    EXPECT_NEAR(eps.mean(), 0.0, 0.5) << to_string(f);
    EXPECT_NEAR(std::sqrt(eps.squaredNorm() / static_cast<double>(n)), 1.0, 0.35) << to_string(f);
    const Eigen::VectorXd yq = q.points.variable("outcome");
    const Eigen::VectorXd expect = lags_response(f) ? Eigen::VectorXd((id - 0.5 * w).fullPivLu().solve(mean)) : mean;
    EXPECT_LT((yq - expect).cwiseAbs().maxCoeff(), 1e-10) << to_string(f);
  }
}

TEST(Generate, DeterministicForSeed) {
  auto d = base(Family::sar);
  d.rho = 0.5;
  const auto a = generate(d, kRook, 1);
  const auto b = generate(d, kRook, 1);
  EXPECT_TRUE(a.points == b.points);
  EXPECT_TRUE(*a.weights == *b.weights);
  d.seed = 6;
  EXPECT_FALSE(a.points == generate(d, kRook, 1).points);
}

TEST(Generate, LayoutAndNames) {
  auto d = base(Family::sdm);
  d.beta = Eigen::Vector3d(1, 2, 3);
  d.gamma = Eigen::Vector2d(0.1, 0.2);
  const auto s = generate(d, kRook, 2);
  EXPECT_EQ(s.points.size(), 42u);
  EXPECT_EQ(s.points.ids()[8], "p8");
  EXPECT_EQ(s.points.coords()[8].x, 1.0);
  EXPECT_EQ(s.points.coords()[8].y, 1.0);
  EXPECT_EQ(s.regressors, (std::vector<std::string>{"x1", "x2"}));
  EXPECT_TRUE(s.points.has_variable("outcome"));
  EXPECT_TRUE(s.weights->standardized());
  EXPECT_TRUE(oracle::row_normalize(oracle::rook(6, 7)) == s.weights->values());

  DgpSpec u = base(Family::sar);
  u.layout = UniformRandom{50, 5.0};
  const auto su = generate(u, {WeightsKind::inverse_distance, {}, 1.0}, 1);
  EXPECT_EQ(su.points.size(), 50u);
  for (const auto& p : su.points.coords()) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LT(p.x, 5.0);
  }
}

TEST(Generate, Validation) {
  auto d = base(Family::sar);
  d.rho = 0.999;
  EXPECT_THROW(generate(d, kRook, 1), InputError);
  d = base(Family::sar);
  d.sigma = 0.0;
  EXPECT_THROW(generate(d, kRook, 1), InputError);
  d = base(Family::sar);
  d.layout = Lattice{2, 4, 1.0};
  EXPECT_THROW(generate(d, kRook, 1), InputError);
  d = base(Family::slx);
  d.gamma = Eigen::Vector2d(1, 1);
  EXPECT_THROW(generate(d, kRook, 1), InputError);
  EXPECT_THROW(generate(base(Family::sar), kRook, 2), InputError);
}

TEST(Generate, FiniteForAdmissibleParameters) {
  for (double rho : {-0.99, -0.5, 0.5, 0.99}) {
    auto d = base(Family::sar);
    d.rho = rho;
    const auto s = generate(d, kRook, 1);
    EXPECT_TRUE(s.points.variable("outcome").allFinite());
  }
}

TEST(Generate, VarianceGrowsWithRho) {
  double prev = 0.0;
  for (double rho : {0.0, 0.3, 0.6, 0.9}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto d = base(Family::sar);
      d.rho = rho;
      d.seed = seed;
      const Eigen::VectorXd y = generate(d, kRook, 1).points.variable("outcome");
      total += (y.array() - y.mean()).square().mean();
    }
    EXPECT_GT(total, prev) << rho;
    prev = total;
  }
}

TEST(TrueValue, Names) {
  DgpSpec d = base(Family::sdm);
  d.beta = Eigen::Vector3d(1, 2, 3);
  d.gamma = Eigen::Vector2d(0.1, 0.2);
  d.rho = 0.4;
  EXPECT_EQ(true_value(d, "(intercept)"), 1.0);
  EXPECT_EQ(true_value(d, "x2"), 3.0);
  EXPECT_EQ(true_value(d, "W*x1"), 0.1);
  EXPECT_EQ(true_value(d, "rho"), 0.4);
}

TEST(Recovery, NeedsTwentySeeds) {
  EXPECT_THROW(recovery_experiment(base(Family::sar), 19), InputError);
}

TEST(Recovery, TableShape) {
  auto d = base(Family::sar);
  d.rho = 0.3;
  const auto t = recovery_experiment(d, 20);
  EXPECT_EQ(t.replicates, 20u);
  ASSERT_EQ(t.parameters.size(), 3u);
  EXPECT_EQ(t.parameters[2].name, "rho");
  for (const auto& p : t.parameters) {
    EXPECT_EQ(p.fits + t.failures.size(), 20u);
    EXPECT_NEAR(p.bias, p.mean - p.truth, 1e-12);
    EXPECT_GE(p.rmse, p.mean_abs_error - 1e-12);
    EXPECT_GE(p.coverage, 0.0);
    EXPECT_LE(p.coverage, 1.0);
  }
}

TEST(Recovery, FailuresAreRecordedNotFatal) {
  auto d = base(Family::sar);
  d.rho = 0.9;
  FitOptions o;
  o.bound = 0.2;  // every fit hits the boundary
  const auto t = recovery_experiment(d, 20, kRook, o);
  EXPECT_EQ(t.failures.size(), 20u);
  EXPECT_TRUE(t.parameters.empty());
  EXPECT_EQ(t.failures[3].seed, derive_seed(d.seed, 3));
}
