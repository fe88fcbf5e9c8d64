#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"
#include "vsynth/spline.hpp"

using namespace vsynth;
using vsynth::testing::ReferenceSpline;

namespace {

std::vector<Vec3> random_points(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(0.0, scale);
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

Spline3 s_curve() {
  return Spline3({{0, 0, 0}, {4, 6, 1}, {8, -6, 2}, {12, 6, -1}, {16, 0, 0}});
}

}  // namespace

TEST(Spline, StraightSegment) {
  const Spline3 s({{0, 0, 0}, {10, 0, 0}});
  EXPECT_EQ(s.evaluate(0.5), Vec3(5, 0, 0));
  EXPECT_EQ(s.evaluate(0.25), Vec3(2.5, 0, 0));
}

TEST(Spline, InterpolatesEndpointsExactly) {
  const Spline3 s({{0, 0, 0}, {1, 1, 0}, {2, 0, 0}});
  EXPECT_EQ(s.evaluate(0.0), Vec3(0, 0, 0));
  EXPECT_EQ(s.evaluate(1.0), Vec3(2, 0, 0));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pts = random_points(rng, 2 + trial % 7, 37.0);
    const Spline3 r(pts);
    EXPECT_EQ(r.evaluate(0.0), pts.front());
    EXPECT_EQ(r.evaluate(1.0), pts.back());
  }
}

TEST(Spline, InterpolatesInteriorControlPoints) {
  std::mt19937_64 rng(5);
  const auto pts = random_points(rng, 6, 20.0);
  const Spline3 s(pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 v = s.evaluate(static_cast<double>(i) / (pts.size() - 1));
    EXPECT_NEAR(distance(v, pts[i]), 0.0, 1e-12);
  }
}

TEST(Spline, MidpointMatchesDenseSolve) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 1, 0}, {2, 0, 0}};
  const Spline3 s(pts);
  const ReferenceSpline ref(pts);
  const Vec3 got = s.evaluate(0.5), want = ref(0.5);
  EXPECT_NEAR(got.x, want.x, 1e-9);
  EXPECT_NEAR(got.y, want.y, 1e-9);
  EXPECT_NEAR(got.z, want.z, 1e-9);
  // Natural spline through the apex: s(0.5) is the middle control point.
  EXPECT_NEAR(got.y, 1.0, 1e-12);
}

TEST(Spline, ClampsParameter) {
  const Spline3 s({{0, 0, 0}, {1, 1, 0}, {2, 0, 0}});
  EXPECT_EQ(s.evaluate(-0.5), s.evaluate(0.0));
  EXPECT_EQ(s.evaluate(1.5), s.evaluate(1.0));
}

TEST(Spline, AgreesWithDenseHornerOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const auto pts = random_points(rng, 3 + 2 * trial, 10.0);
    const Spline3 s(pts);
    const ReferenceSpline ref(pts);
    for (int i = 0; i < 1000; ++i) {
      const double t = ut(rng);
      const Vec3 d = s.evaluate(t) - ref(t);
      ASSERT_LT(std::max({std::abs(d.x), std::abs(d.y), std::abs(d.z)}), 1e-12) << "t=" << t;
    }
  }
}

TEST(Spline, NaturalEndConditionsAndC2Interior) {
  std::mt19937_64 rng(13);
  const Spline3 s(random_points(rng, 7, 10.0));
  EXPECT_NEAR(norm(s.second_derivative(0.0)), 0.0, 1e-10);
  EXPECT_NEAR(norm(s.segments().back().second_derivative(1.0)), 0.0, 1e-10);
  const auto segs = s.segments();
  for (std::size_t k = 0; k + 1 < segs.size(); ++k) {
    EXPECT_NEAR(distance(segs[k].value(1.0), segs[k + 1].value(0.0)), 0.0, 1e-12);
    EXPECT_NEAR(distance(segs[k].derivative(1.0), segs[k + 1].derivative(0.0)), 0.0, 1e-10);
    EXPECT_NEAR(distance(segs[k].second_derivative(1.0), segs[k + 1].second_derivative(0.0)), 0.0, 1e-10);
  }
}

TEST(Spline, DerivativeMatchesFiniteDifference) {
  const Spline3 s = s_curve();
  for (double t : {0.1, 0.33, 0.6, 0.87}) {
    const double h = 1e-6;
    const Vec3 fd = (s.evaluate(t + h) - s.evaluate(t - h)) / (2 * h);
    EXPECT_NEAR(distance(fd, s.derivative(t)), 0.0, 1e-5);
  }
}

TEST(Spline, RejectsBadInput) {
  EXPECT_THROW(Spline3({{0, 0, 0}}), ConfigError);
  EXPECT_THROW(Spline3({{0, 0, 0}, {1, std::nan(""), 0}}), ConfigError);
  EXPECT_THROW(Spline1({1.0, std::numeric_limits<double>::infinity()}), ConfigError);
}

TEST(Spline, ScalarSpline) {
  const Spline1 r({2.0, 4.0, 2.0});
  EXPECT_EQ(r.evaluate(0.0), 2.0);
  EXPECT_EQ(r.evaluate(1.0), 2.0);
  EXPECT_NEAR(r.evaluate(0.5), 4.0, 1e-12);
  EXPECT_NEAR(segment_max(r.segments()[0]), 4.0, 1e-12);
}

TEST(Spline, SegmentBoundsContainDenseSamples) {
  const Spline3 s = s_curve();
  for (const auto& seg : s.segments()) {
    const auto [lo, hi] = segment_bounds(seg);
    for (int i = 0; i <= 1000; ++i) {
      const Vec3 p = seg.value(i / 1000.0);
      for (int a = 0; a < 3; ++a) {
        EXPECT_GE(p[a], lo[a] - 1e-12);
        EXPECT_LE(p[a], hi[a] + 1e-12);
      }
    }
  }
}

// ---- projection -----------------------------------------------------------------------------

TEST(Projection, PerpendicularFoot) {
  const Spline3 s({{0, 0, 0}, {10, 0, 0}});
  const auto p = project(s, {5, 3, 0});
  EXPECT_NEAR(p.t_star, 0.5, 1e-9);
  EXPECT_NEAR(p.distance, 3.0, 1e-9);
  EXPECT_TRUE(p.converged);
}

TEST(Projection, ClampedEndpoint) {
  const Spline3 s({{0, 0, 0}, {10, 0, 0}});
  const auto p = project(s, {15, 0, 0});
  EXPECT_EQ(p.t_star, 1.0);
  EXPECT_NEAR(p.distance, 5.0, 1e-12);
}

TEST(Projection, MatchesDenseSweepOnSCurve) {
  const Spline3 s = s_curve();
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-2, 18), uy(-8, 8), uz(-3, 4);
  for (int i = 0; i < 100; ++i) {
    const Vec3 q(ux(rng), uy(rng), uz(rng));
    const auto got = project(s, q);
    const auto want = vsynth::testing::dense_projection(s, q);
    EXPECT_LE(got.distance, want.distance + 1e-4) << q;
    EXPECT_NEAR(got.distance, want.distance, 1e-4) << q;
  }
}

TEST(Projection, DistanceConsistentWithParameter) {
  const Spline3 s = s_curve();
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-5, 20);
  for (int i = 0; i < 200; ++i) {
    const Vec3 q(u(rng), u(rng) - 8, u(rng) - 8);
    const auto p = project(s, q);
    EXPECT_NEAR(p.distance, distance(q, s.evaluate(p.t_star)), 1e-9 * std::max(1.0, p.distance));
    EXPECT_GE(p.t_star, 0.0);
    EXPECT_LE(p.t_star, 1.0);
  }
}

TEST(Projection, TranslationEquivariance) {
  const Spline3 s = s_curve();
  const Vec3 offset(13.5, -7.25, 100.0);
  const Spline3 moved = s.translated(offset);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-5, 20);
  for (int i = 0; i < 100; ++i) {
    const Vec3 q(u(rng), u(rng) - 8, u(rng) - 8);
    const auto a = project(s, q);
    const auto b = project(moved, q + offset);
    EXPECT_NEAR(a.t_star, b.t_star, 1e-9);
    EXPECT_NEAR(a.distance, b.distance, 1e-9);
  }
}

TEST(Projection, MoreSeedsNeverWorse) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(0, 30);
  for (int trial = 0; trial < 10; ++trial) {
    const Spline3 s(random_points(rng, 8, 30.0));
    for (int i = 0; i < 50; ++i) {
      const Vec3 q(u(rng), u(rng), u(rng));
      double prev = std::numeric_limits<double>::infinity();
      for (int m = 1; m <= 12; ++m) {
        const double d = project(s, q, m).distance;
        EXPECT_LE(d, prev);
        prev = d;
      }
    }
  }
}

TEST(Projection, ZeroDerivativeFallsBackToBisection) {
  // Repeated control points make s'(t) vanish at a knot; the query sits on that knot.
  const Spline3 s({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}});
  const auto p = project(s, {1, 0, 0});
  EXPECT_NEAR(p.distance, 1.0, 1e-12);
  EXPECT_FALSE(p.converged);
}

TEST(Projection, RejectsNonPositiveMultistart) {
  const Spline3 s({{0, 0, 0}, {1, 0, 0}});
  EXPECT_THROW(project(s, {0, 0, 0}, 0), ConfigError);
}

TEST(Projection, RangeRestricted) {
  const Spline3 s({{0, 0, 0}, {10, 0, 0}, {20, 0, 0}});
  const auto p = project(s, {15, 1, 0}, 0.0, 0.5);
  EXPECT_NEAR(p.t_star, 0.5, 1e-12);
  EXPECT_NEAR(p.distance, std::hypot(5.0, 1.0), 1e-9);
}
