#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vsynth/errors.hpp"
#include "vsynth/vec3.hpp"

namespace vsynth {

/// Natural cubic interpolating spline over uniformly spaced knots, parameterized on t in [0, 1].
///
/// With n control points the domain splits into n-1 segments of equal parameter width;
/// segment k covers [k/(n-1), (k+1)/(n-1)] and is stored as a + b*u + c*u^2 + d*u^3 in the
/// local coordinate u in [0, 1]. `Value` is either double (radius) or Vec3 (centerline).
template <typename Value>
class CubicSpline {
 public:
  struct Segment {
    Value a{}, b{}, c{}, d{};

    Value value(double u) const { return a + u * (b + u * (c + u * d)); }
    Value derivative(double u) const { return b + u * (2.0 * c + u * (3.0 * d)); }
    Value second_derivative(double u) const { return 2.0 * c + (6.0 * u) * d; }
  };

  CubicSpline() = default;

  explicit CubicSpline(std::vector<Value> control_points) : points_(std::move(control_points)) {
    if (points_.size() < 2) throw ConfigError("spline needs at least 2 control points");
    for (const auto& p : points_) {
      if (!is_finite(p)) throw ConfigError("spline control point is not finite");
    }
    fit();
  }

  std::span<const Value> control_points() const { return points_; }
  std::span<const Segment> segments() const { return segments_; }
  std::size_t segment_count() const { return segments_.size(); }

  /// Segment index and local coordinate for a (clamped) parameter.
  std::pair<std::size_t, double> locate(double t) const {
    t = std::clamp(t, 0.0, 1.0);
    const double scaled = t * static_cast<double>(segments_.size());
    auto k = static_cast<std::size_t>(scaled);
    if (k >= segments_.size()) k = segments_.size() - 1;
    return {k, scaled - static_cast<double>(k)};
  }

  Value evaluate(double t) const {
    if (!(t > 0.0)) return points_.front();
    if (t >= 1.0) return points_.back();
    const auto [k, u] = locate(t);
    return segments_[k].value(u);
  }

  /// ds/dt (not ds/du): includes the segment-count chain factor.
  Value derivative(double t) const {
    const auto [k, u] = locate(t);
    return static_cast<double>(segments_.size()) * segments_[k].derivative(u);
  }

  Value second_derivative(double t) const {
    const auto [k, u] = locate(t);
    const double m = static_cast<double>(segments_.size());
    return (m * m) * segments_[k].second_derivative(u);
  }

  /// Same curve shifted by `offset` (Vec3 splines) or raised by `offset` (scalar splines).
  CubicSpline translated(const Value& offset) const {
    std::vector<Value> moved(points_);
    for (auto& p : moved) p += offset;
    return CubicSpline(std::move(moved));
  }

  CubicSpline scaled(double factor) const {
    std::vector<Value> moved(points_);
    for (auto& p : moved) p *= factor;
    return CubicSpline(std::move(moved));
  }

 private:
  // Second derivatives M_i (in u) solve M_{i-1} + 4 M_i + M_{i+1} = 6 (p_{i+1} - 2 p_i + p_{i-1})
  // with M_0 = M_{n-1} = 0; Thomas algorithm on the interior rows.
  void fit() {
    const std::size_t n = points_.size();
    std::vector<Value> moments(n, Value{});
    if (n > 2) {
      const std::size_t m = n - 2;
      std::vector<double> upper(m, 0.0);
      std::vector<Value> rhs(m);
      for (std::size_t i = 0; i < m; ++i) {
        rhs[i] = 6.0 * (points_[i + 2] - 2.0 * points_[i + 1] + points_[i]);
      }
      double pivot = 4.0;
      upper[0] = 1.0 / pivot;
      rhs[0] = rhs[0] * (1.0 / pivot);
      for (std::size_t i = 1; i < m; ++i) {
        pivot = 4.0 - upper[i - 1];
        upper[i] = 1.0 / pivot;
        rhs[i] = (rhs[i] - rhs[i - 1]) * (1.0 / pivot);
      }
      for (std::size_t i = m - 1; i-- > 0;) rhs[i] = rhs[i] - upper[i] * rhs[i + 1];
      for (std::size_t i = 0; i < m; ++i) moments[i + 1] = rhs[i];
    }
    segments_.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      auto& s = segments_[k];
      s.a = points_[k];
      s.b = points_[k + 1] - points_[k] - (2.0 * moments[k] + moments[k + 1]) * (1.0 / 6.0);
      s.c = 0.5 * moments[k];
      s.d = (moments[k + 1] - moments[k]) * (1.0 / 6.0);
    }
  }

  std::vector<Value> points_;
  std::vector<Segment> segments_;
};

using Spline3 = CubicSpline<Vec3>;
using Spline1 = CubicSpline<double>;

inline Spline3 build_spline3(std::vector<Vec3> control_points) {
  return Spline3(std::move(control_points));
}

inline Spline1 build_spline1(std::vector<double> control_values) {
  return Spline1(std::move(control_values));
}

/// Result of a nearest-point projection onto a Spline3.
struct Projection {
  double t_star = 0.0;
  double distance = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct ProjectionOptions {
  int multistart = 8;
  /// Coarse samples per spline segment used to pick seeds.
  int samples_per_segment = 8;
  double step_tolerance = 1e-6;
  int max_iterations = 50;
};

namespace detail {

struct SeedResult {
  double t = 0.0;
  double f = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Gauss-Newton on r(t) = s(t) - q inside [lo, hi], with a Newton correction. A step that increases f is halved until it
// does not; a vanishing derivative switches to bisection of the bracket around the iterate.
inline SeedResult gauss_newton(const Spline3& s, const Vec3& q, double t, double lo, double hi,
                               double bracket, const ProjectionOptions& opt) {
  SeedResult out{t, squared_norm(s.evaluate(t) - q), false, 0};
  double blo = std::max(lo, t - bracket);
  double bhi = std::min(hi, t + bracket);
  int flat_steps = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    out.iterations = it;
    const Vec3 r = s.evaluate(out.t) - q;
    const Vec3 ds = s.derivative(out.t);
    const double jtj = squared_norm(ds);
    double next;
    if (jtj < 1e-24) {
      ++flat_steps;
      const double left = 0.5 * (blo + out.t);
      const double right = 0.5 * (out.t + bhi);
      const double fl = squared_norm(s.evaluate(left) - q);
      const double fr = squared_norm(s.evaluate(right) - q);
      if (fl < fr) {
        bhi = out.t;
        next = left;
      } else {
        blo = out.t;
        next = right;
      }
      const double fn = std::min(fl, fr);
      if (fn <= out.f) {
        out.t = next;
        out.f = fn;
      }
      if (bhi - blo < opt.step_tolerance) break;
      continue;
    }
    flat_steps = 0;
    // The Gauss-Newton step converges only linearly when the residual is large against the
    // curvature; adding the r.s'' term gives the Newton step wherever it stays a descent.
    const double h = jtj + dot(r, s.second_derivative(out.t));
    double step = -dot(ds, r) / (h > 0.0 ? h : jtj);
    if (std::abs(step) < opt.step_tolerance) {
      // Below the tolerance f differences are rounding noise; take the step as final.
      out.t = std::clamp(out.t + step, lo, hi);
      out.f = squared_norm(s.evaluate(out.t) - q);
      out.converged = true;
      break;
    }
    double f_next = 0.0;
    for (int halving = 0; halving < 30; ++halving) {
      next = std::clamp(out.t + step, lo, hi);
      f_next = squared_norm(s.evaluate(next) - q);
      if (f_next <= out.f) break;
      step *= 0.5;
    }
    const double moved = std::abs(next - out.t);
    if (f_next <= out.f) {
      out.t = next;
      out.f = f_next;
    }
    if (moved < opt.step_tolerance) {
      out.converged = true;
      break;
    }
  }
  if (flat_steps > 0) out.converged = false;
  return out;
}

}  // namespace detail

/// Nearest point on the sub-curve t in [lo, hi] to `query`.
///
/// Seeds are the discrete local minima of ||s(t) - q||^2 over a coarse uniform grid (best
/// first, at most `multistart` of them); each is refined by Gauss-Newton and the best result
/// wins. Raising `multistart` only adds seeds, so the returned distance never increases.
inline Projection project(const Spline3& spline, const Vec3& query, double lo, double hi,
                          const ProjectionOptions& opt = {}) {
  if (opt.multistart < 1) throw ConfigError("multistart must be >= 1");
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, lo, 1.0);
  const double span = hi - lo;
  const double segments_in_range =
      std::max(1.0, std::ceil(span * static_cast<double>(spline.segment_count()) - 1e-9));
  const int grid = std::max(2, static_cast<int>(segments_in_range) * opt.samples_per_segment + 1);
  const double h = span / static_cast<double>(grid - 1);

  // Small fixed-size buffers cover the common per-segment call without heap traffic.
  constexpr int kStack = 65;
  std::array<double, kStack> stack_f{};
  std::vector<double> heap_f;
  double* f = stack_f.data();
  if (grid > kStack) {
    heap_f.resize(static_cast<std::size_t>(grid));
    f = heap_f.data();
  }
  for (int i = 0; i < grid; ++i) {
    const double t = (i == grid - 1) ? hi : lo + h * i;
    f[i] = squared_norm(spline.evaluate(t) - query);
  }

  std::array<int, kStack> stack_idx{};
  std::vector<int> heap_idx;
  int* minima = stack_idx.data();
  if (grid > kStack) {
    heap_idx.resize(static_cast<std::size_t>(grid));
    minima = heap_idx.data();
  }
  int n_minima = 0;
  for (int i = 0; i < grid; ++i) {
    const bool left_ok = (i == 0) || f[i] <= f[i - 1];
    const bool right_ok = (i == grid - 1) || f[i] < f[i + 1];
    if (left_ok && right_ok) minima[n_minima++] = i;
  }
  if (n_minima == 0) {
    minima[n_minima++] = static_cast<int>(std::min_element(f, f + grid) - f);
  }
  const int seeds = std::min(n_minima, opt.multistart);
  std::partial_sort(minima, minima + seeds, minima + n_minima, [&](int a, int b) {
    return f[a] < f[b] || (f[a] == f[b] && a < b);
  });

  detail::SeedResult best{};
  bool have = false;
  for (int s = 0; s < seeds; ++s) {
    const int i = minima[s];
    const double t0 = (i == grid - 1) ? hi : lo + h * i;
    auto r = detail::gauss_newton(spline, query, t0, lo, hi, h, opt);
    if (!have || r.f < best.f || (r.f == best.f && r.t < best.t)) {
      best = r;
      have = true;
    }
  }
  return Projection{best.t, std::sqrt(best.f), best.converged, best.iterations};
}

inline Projection project(const Spline3& spline, const Vec3& query, int multistart = 8) {
  ProjectionOptions opt;
  opt.multistart = multistart;
  return project(spline, query, 0.0, 1.0, opt);
}

/// Axis-aligned bounds of one cubic segment (exact: endpoints plus interior extrema).
inline std::pair<Vec3, Vec3> segment_bounds(const Spline3::Segment& seg) {
  Vec3 lo = seg.value(0.0), hi = lo;
  auto include = [&](double u) {
    const Vec3 p = seg.value(u);
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  };
  include(1.0);
  for (int a = 0; a < 3; ++a) {
    // d/du = b + 2c u + 3d u^2
    const double qa = 3.0 * seg.d[a], qb = 2.0 * seg.c[a], qc = seg.b[a];
    auto try_root = [&](double u) {
      if (u > 0.0 && u < 1.0) include(u);
    };
    if (std::abs(qa) < 1e-14) {
      if (std::abs(qb) > 1e-14) try_root(-qc / qb);
    } else {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        try_root((-qb + sq) / (2.0 * qa));
        try_root((-qb - sq) / (2.0 * qa));
      }
    }
  }
  return {lo, hi};
}

/// Maximum of a scalar cubic segment over u in [0, 1].
inline double segment_max(const Spline1::Segment& seg) {
  double best = std::max(seg.value(0.0), seg.value(1.0));
  const double qa = 3.0 * seg.d, qb = 2.0 * seg.c, qc = seg.b;
  auto try_root = [&](double u) {
    if (u > 0.0 && u < 1.0) best = std::max(best, seg.value(u));
  };
  if (std::abs(qa) < 1e-14) {
    if (std::abs(qb) > 1e-14) try_root(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      try_root((-qb + sq) / (2.0 * qa));
      try_root((-qb - sq) / (2.0 * qa));
    }
  }
  return best;
}

}  // namespace vsynth
