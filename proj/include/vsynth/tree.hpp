#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "vsynth/config.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/spline.hpp"

namespace vsynth {

struct Branch {
  Spline3 centerline;
  Spline1 radius;
  int level = 0;
  /// Index into VesselTree::branches; empty for roots.
  std::optional<std::size_t> parent;
  double attach_t = 0.0;
};

/// Forest of branches. Parents always precede their children.
struct VesselTree {
  std::vector<Branch> branches;
  SynthesisConfig config_used;
};

/// Geometry constants of the branching model.
struct BranchingRules {
  double min_root_fraction = 0.25;
  double attach_lo = 0.1, attach_hi = 0.9;
  double cone_lo_deg = 15.0, cone_hi_deg = 75.0;
  double length_lo = 0.3, length_hi = 0.9;
};

/// Two points uniform in the box [0, extent - 1] per axis, redrawn until they are at least
/// 25% of the smallest extent apart.
inline std::pair<Vec3, Vec3> sample_root_line(const Shape& shape, Rng& rng,
                                              const BranchingRules& rules = {}) {
  check_shape(shape);
  const double min_extent = *std::min_element(shape.begin(), shape.end());
  const double min_len = rules.min_root_fraction * min_extent;
  auto draw = [&] {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = uniform(rng, 0.0, static_cast<double>(shape[a] - 1));
    return p;
  };
  // A degenerate 1-voxel-wide box cannot satisfy the bound; fall back to its diagonal.
  double max_len = 0.0;
  for (int a = 0; a < 3; ++a) max_len += static_cast<double>(shape[a] - 1) * (shape[a] - 1);
  if (std::sqrt(max_len) < min_len) {
    return {Vec3{0, 0, 0}, Vec3(shape[0] - 1.0, shape[1] - 1.0, shape[2] - 1.0)};
  }
  for (;;) {
    Vec3 a = draw();
    Vec3 b = draw();
    if (distance(a, b) >= min_len) return {a, b};
  }
}

/// n interior points evenly spaced on the segment, each moved by N(0, magnitude^2) per axis.
inline std::vector<Vec3> jitter_control_points(const std::pair<Vec3, Vec3>& line, int n,
                                               double magnitude, Rng& rng) {
  if (n < 0) throw ConfigError("jitter: control point count must be >= 0");
  if (magnitude < 0) throw ConfigError("jitter: magnitude must be >= 0");
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n) + 2);
  pts.push_back(line.first);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 1; i <= n; ++i) {
    const double f = static_cast<double>(i) / (n + 1);
    Vec3 p = line.first + f * (line.second - line.first);
    if (magnitude > 0) {
      for (int a = 0; a < 3; ++a) p[a] += magnitude * gauss(rng);
    }
    pts.push_back(p);
  }
  pts.push_back(line.second);
  return pts;
}

/// Polyline length of a centerline from uniform samples.
inline double approximate_length(const Spline3& s, int samples = 64) {
  double len = 0.0;
  Vec3 prev = s.evaluate(0.0);
  for (int i = 1; i <= samples; ++i) {
    const Vec3 p = s.evaluate(static_cast<double>(i) / samples);
    len += distance(prev, p);
    prev = p;
  }
  return len;
}

/// Unit vector at angle `polar` from `axis`, rotated by `azimuth` around it.
inline Vec3 cone_direction(const Vec3& axis, double polar, double azimuth) {
  const Vec3 w = axis / norm(axis);
  const Vec3 helper = std::abs(w.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u = cross(w, helper) / norm(cross(w, helper));
  const Vec3 v = cross(w, u);
  return std::cos(polar) * w + std::sin(polar) * (std::cos(azimuth) * u + std::sin(azimuth) * v);
}

namespace detail {

inline Spline1 radius_profile(double base, std::size_t n_points, double variation, double r_min,
                              Rng& rng) {
  std::vector<double> values(std::max<std::size_t>(n_points, 2));
  for (auto& v : values) {
    const double wobble = variation > 0 ? uniform(rng, -variation, variation) : 0.0;
    v = std::max(r_min, base * (1.0 + wobble));
  }
  return Spline1(std::move(values));
}

}  // namespace detail

/// Samples one forest: root lines with jittered control points, then recursive children
/// attached at t in [0.1, 0.9] and pointing into a cone around the parent tangent.
inline VesselTree sample_tree(const SynthesisConfig& config, Rng& rng,
                              const BranchingRules& rules = {}) {
  validate(config);
  const TreeConfig& tc = config.tree;
  const double r_min = config.raster.r_min;
  VesselTree tree;
  tree.config_used = config;

  struct Pending {
    std::size_t index;
    int max_depth;
  };

  const long long n_trees = tc.n_trees.sample_int(rng);
  for (long long t = 0; t < n_trees; ++t) {
    const int max_depth = static_cast<int>(tc.max_depth.sample_int(rng));
    const auto line = sample_root_line(config.volume_shape, rng, rules);
    const int n_ctrl = static_cast<int>(tc.n_control_points.sample_int(rng));
    const double jitter = tc.jitter_magnitude.sample(rng);
    auto pts = jitter_control_points(line, n_ctrl, jitter, rng);
    const double base = std::max(r_min, tc.root_radius.sample(rng));
    const double variation = tc.radius_variation.sample(rng);
    const std::size_t n_radius = pts.size();
    Branch root{Spline3(std::move(pts)),
                detail::radius_profile(base, n_radius, variation, r_min, rng), 0, std::nullopt, 0.0};
    tree.branches.push_back(std::move(root));

    // Depth-first so a tree's branches stay contiguous and ordering is stable.
    std::vector<Pending> stack{{tree.branches.size() - 1, max_depth}};
    while (!stack.empty()) {
      const Pending cur = stack.back();
      stack.pop_back();
      const int level = tree.branches[cur.index].level;
      if (level >= cur.max_depth) continue;
      const long long n_children = tc.n_children.sample_int(rng);
      std::vector<std::size_t> spawned;
      for (long long c = 0; c < n_children; ++c) {
        const Branch& parent = tree.branches[cur.index];
        const double attach = uniform(rng, rules.attach_lo, rules.attach_hi);
        const Vec3 start = parent.centerline.evaluate(attach);
        Vec3 tangent = parent.centerline.derivative(attach);
        if (norm(tangent) < 1e-12) tangent = parent.centerline.control_points().back() - start;
        if (norm(tangent) < 1e-12) tangent = Vec3{1, 0, 0};
        const double pi = std::numbers::pi;
        const double polar = uniform(rng, rules.cone_lo_deg, rules.cone_hi_deg) * pi / 180.0;
        const double azimuth = uniform(rng, 0.0, 2.0 * pi);
        const double length = uniform(rng, rules.length_lo, rules.length_hi) *
                              std::max(1.0, approximate_length(parent.centerline));
        const Vec3 end = start + length * cone_direction(tangent, polar, azimuth);
        const int c_ctrl = static_cast<int>(tc.n_control_points.sample_int(rng));
        const double c_jitter = tc.jitter_magnitude.sample(rng);
        auto c_pts = jitter_control_points({start, end}, c_ctrl, c_jitter, rng);
        const double parent_r = std::max(r_min, parent.radius.evaluate(attach));
        const double c_base = std::max(r_min, parent_r * tc.radius_ratio.sample(rng));
        const double c_var = tc.radius_variation.sample(rng);
        const std::size_t c_n_radius = c_pts.size();
        Branch child{Spline3(std::move(c_pts)),
                     detail::radius_profile(c_base, c_n_radius, c_var, r_min, rng), level + 1,
                     cur.index, attach};
        tree.branches.push_back(std::move(child));
        spawned.push_back(tree.branches.size() - 1);
      }
      for (auto it = spawned.rbegin(); it != spawned.rend(); ++it) stack.push_back({*it, cur.max_depth});
    }
  }
  return tree;
}

/// Stable JSON form (control points and radii at full double precision).
inline json to_json(const VesselTree& tree) {
  json branches = json::array();
  for (const auto& b : tree.branches) {
    json pts = json::array();
    for (const auto& p : b.centerline.control_points()) pts.push_back({p.x, p.y, p.z});
    json radii = json::array();
    for (double r : b.radius.control_points()) radii.push_back(r);
    json jb{{"level", b.level}, {"attach_t", b.attach_t}, {"control_points", pts}, {"radius", radii}};
    jb["parent"] = b.parent ? json(*b.parent) : json(nullptr);
    branches.push_back(std::move(jb));
  }
  return json{{"branches", branches}, {"config", to_json(tree.config_used)}};
}

inline VesselTree tree_from_json(const json& j) {
  VesselTree tree;
  try {
    tree.config_used = config_from_json(j.at("config"));
    for (const auto& jb : j.at("branches")) {
      std::vector<Vec3> pts;
      for (const auto& p : jb.at("control_points")) pts.emplace_back(p.at(0), p.at(1), p.at(2));
      Branch b{Spline3(std::move(pts)), Spline1(jb.at("radius").get<std::vector<double>>()),
               jb.at("level").get<int>(), std::nullopt, jb.at("attach_t").get<double>()};
      if (!jb.at("parent").is_null()) b.parent = jb.at("parent").get<std::size_t>();
      tree.branches.push_back(std::move(b));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed tree: ") + e.what());
  }
  return tree;
}

/// Shifts every branch by `offset`.
inline VesselTree translated(const VesselTree& tree, const Vec3& offset) {
  VesselTree out = tree;
  for (auto& b : out.branches) b.centerline = b.centerline.translated(offset);
  return out;
}

/// Multiplies every radius spline by `factor`.
inline VesselTree radius_scaled(const VesselTree& tree, double factor) {
  VesselTree out = tree;
  for (auto& b : out.branches) b.radius = b.radius.scaled(factor);
  return out;
}

inline VesselTree merged(const VesselTree& a, const VesselTree& b) {
  VesselTree out = a;
  const std::size_t shift = a.branches.size();
  for (Branch br : b.branches) {
    if (br.parent) *br.parent += shift;
    out.branches.push_back(std::move(br));
  }
  return out;
}

}  // namespace vsynth
