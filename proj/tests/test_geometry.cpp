#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spatialecon/geometry.hpp"

using namespace spatialecon;

TEST(Distance, PythagoreanTriple) {
  EXPECT_EQ(distance({0, 0}, {3, 4}, Metric::euclidean), 5.0);
  EXPECT_EQ(distance({0, 0}, {3, 4}, Metric::manhattan), 7.0);
}

TEST(Distance, SamePointIsZero) {
  EXPECT_EQ(distance({1, 2}, {1, 2}, Metric::euclidean), 0.0);
  EXPECT_EQ(distance({1, 2}, {1, 2}, Metric::manhattan), 0.0);
}

TEST(Distance, NonFiniteCoordinateRejected) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_THROW(distance({nan, 0}, {0, 0}, Metric::euclidean), InputError);
  EXPECT_THROW(distance({0, 0}, {0, inf}, Metric::manhattan), InputError);
}

TEST(DistanceMatrix, TwoPoints) {
  const std::vector<Point> pts{{0, 0}, {3, 4}};
  const auto d = build_distance_matrix(pts, Metric::euclidean);
  Eigen::Matrix2d expect;
  expect << 0, 5, 5, 0;
  EXPECT_TRUE(d.values() == Eigen::MatrixXd(expect));
  EXPECT_EQ(d.metric(), Metric::euclidean);
}

TEST(DistanceMatrix, UnitManhattanSteps) {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {0, 1}};
  const auto d = build_distance_matrix(pts, Metric::manhattan);
  Eigen::Matrix3d expect;
  expect << 0, 1, 1, 1, 0, 2, 1, 2, 0;
  EXPECT_TRUE(d.values() == Eigen::MatrixXd(expect));
}

TEST(DistanceMatrix, TooFewPoints) {
  const std::vector<Point> one{{0, 0}};
  try {
    build_distance_matrix(one, Metric::euclidean);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::too_few_observations);
  }
}

TEST(DistanceMatrix, MatchesBruteForceAndInvariants) {
  std::mt19937_64 gen(7);
  for (int rep = 0; rep < 20; ++rep) {
    const auto pts = oracle::random_points(5 + rep * 3, 10.0, gen);
    const auto de = build_distance_matrix(pts, Metric::euclidean);
    const auto dm = build_distance_matrix(pts, Metric::manhattan);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      EXPECT_EQ(de(ii, ii), 0.0);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
        EXPECT_EQ(de(ii, jj), std::sqrt(dy * dy + dx * dx));
        EXPECT_EQ(dm(ii, jj), std::abs(dy) + std::abs(dx));
        EXPECT_EQ(de(ii, jj), de(jj, ii));
        EXPECT_EQ(dm(ii, jj), dm(jj, ii));
        EXPECT_LE(de(ii, jj), dm(ii, jj) * (1 + 1e-15));
      }
    }
  }
}

TEST(PointSet, Validates) {
  EXPECT_THROW(PointSet({"a"}, {{0, 0}}), InputError);
  EXPECT_THROW(PointSet({"a", "a"}, {{0, 0}, {1, 1}}), InputError);
  EXPECT_THROW(PointSet({"a", "b"}, {{0, 0}}), InputError);
  EXPECT_THROW(PointSet({"a", "b"}, {{0, 0}, {std::nan(""), 1}}), InputError);
  EXPECT_THROW(PointSet({"a", "b"}, {{0, 0}, {1, 1}}, {{"v", Eigen::Vector3d(1, 2, 3)}}), InputError);
  EXPECT_THROW(PointSet({"a", "b"}, {{0, 0}, {1, 1}},
                        {{"v", Eigen::Vector2d(1, 2)}, {"v", Eigen::Vector2d(1, 2)}}),
               InputError);
  const PointSet ok({"a", "b"}, {{0, 0}, {1, 1}}, {{"v", Eigen::Vector2d(1, 2)}});
  EXPECT_EQ(ok.size(), 2u);
  EXPECT_TRUE(ok.has_variable("v"));
  EXPECT_FALSE(ok.has_variable("w"));
  EXPECT_EQ(ok.variable("v")(1), 2.0);
  EXPECT_THROW(ok.variable("w"), InputError);
}

TEST(Metric, ParsesNames) {
  EXPECT_EQ(parse_metric("euclidean"), Metric::euclidean);
  EXPECT_EQ(parse_metric("manhattan"), Metric::manhattan);
  EXPECT_THROW(parse_metric("chebyshev"), InputError);
}
