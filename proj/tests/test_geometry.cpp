#include <gtest/gtest.h>

#include "asj/geometry.hpp"

using namespace asj;

TEST(WrapAngle, MapsIntoHalfOpenTurn) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kTwoPi), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(-kTwoPi), 0.0);
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-0.5), kTwoPi - 0.5, 1e-12);
  for (double a : {-17.3, -1e-9, 0.0, 1.0, 7.0, 123.456}) {
    const double r = wrap_angle(a);
    EXPECT_GE(r, 0.0);
    EXPECT_LT(r, kTwoPi);
  }
}

TEST(CircDist, ShortestArcAndBounds) {
  EXPECT_DOUBLE_EQ(circ_dist(0.3, 0.3), 0.0);
  EXPECT_NEAR(circ_dist(0.1, kTwoPi - 0.1), 0.2, 1e-12);
  EXPECT_NEAR(circ_dist(0.0, kPi), kPi, 1e-12);
  EXPECT_NEAR(circ_dist(-0.2, 0.2), 0.4, 1e-12);  // wraps negatives first
  for (double a = 0.0; a < kTwoPi; a += 0.37) {
    for (double b = 0.0; b < kTwoPi; b += 0.53) {
      const double d = circ_dist(a, b);
      EXPECT_DOUBLE_EQ(d, circ_dist(b, a));
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, kPi + 1e-15);
    }
  }
}

TEST(Vec2, ArithmeticAndNorms) {
  const Vec2 a{3.0, 4.0}, b{1.0, -2.0};
  EXPECT_DOUBLE_EQ((a + b).x, 4.0);
  EXPECT_DOUBLE_EQ((a + b).y, 2.0);
  EXPECT_DOUBLE_EQ((a - b).x, 2.0);
  EXPECT_DOUBLE_EQ((a - b).y, 6.0);
  EXPECT_DOUBLE_EQ((2.0 * a).x, 6.0);
  EXPECT_DOUBLE_EQ(norm(a), 5.0);
  EXPECT_DOUBLE_EQ(dist({0.0, 0.0}, a), 5.0);
  EXPECT_DOUBLE_EQ(dist(a, a), 0.0);
}

TEST(RayAngle, RasterConventionYDown) {
  const Vec2 o{10.0, 20.0};
  EXPECT_NEAR(ray_angle(o, {11.0, 20.0}), 0.0, 1e-12);
  EXPECT_NEAR(ray_angle(o, {10.0, 21.0}), kPi / 2.0, 1e-12);  // downward
  EXPECT_NEAR(ray_angle(o, {9.0, 20.0}), kPi, 1e-12);
  EXPECT_NEAR(ray_angle(o, {10.0, 19.0}), 3.0 * kPi / 2.0, 1e-12);
  EXPECT_NEAR(ray_angle(o, {11.0, 21.0}), kPi / 4.0, 1e-12);
}

TEST(PixelCoord, Equality) {
  EXPECT_TRUE((PixelCoord{3, 5} == PixelCoord{3, 5}));
  EXPECT_FALSE((PixelCoord{3, 5} == PixelCoord{5, 3}));
}
