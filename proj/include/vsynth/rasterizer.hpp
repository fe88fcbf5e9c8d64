#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vsynth/config.hpp"
#include "vsynth/parallel.hpp"
#include "vsynth/spline.hpp"
#include "vsynth/tree.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

struct RasterOptions {
  double r_min = 0.5;
  int multistart = 8;
  int threads = 1;
};

inline RasterOptions raster_options(const SynthesisConfig& c, int threads = 1) {
  return {c.raster.r_min, c.raster.multistart, threads};
}

namespace detail {

// One centerline segment with its parameter range and dilated voxel box.
struct SegmentJob {
  const Branch* branch;
  double t_lo, t_hi;
  std::array<int, 3> lo, hi;  // inclusive voxel bounds, already clipped to the grid
};

inline std::vector<SegmentJob> plan_segments(const VesselTree& tree, const Shape& shape,
                                             double r_min) {
  std::vector<SegmentJob> jobs;
  for (const Branch& b : tree.branches) {
    const auto segs = b.centerline.segments();
    const double m = static_cast<double>(segs.size());
    // Max radius over the branch; used as the dilation for every segment of it.
    double r_max = r_min;
    for (const auto& rs : b.radius.segments()) r_max = std::max(r_max, segment_max(rs));
    for (std::size_t k = 0; k < segs.size(); ++k) {
      const auto [blo, bhi] = segment_bounds(segs[k]);
      SegmentJob job{&b, k / m, (k + 1) / m, {}, {}};
      bool empty = false;
      for (int a = 0; a < 3; ++a) {
        const double lo = std::ceil(blo[a] - r_max - 1.0);
        const double hi = std::floor(bhi[a] + r_max + 1.0);
        const double clo = std::max(lo, 0.0);
        const double chi = std::min(hi, static_cast<double>(shape[a] - 1));
        if (clo > chi) {
          empty = true;
          break;
        }
        job.lo[a] = static_cast<int>(clo);
        job.hi[a] = static_cast<int>(chi);
      }
      if (!empty) jobs.push_back(job);
    }
  }
  return jobs;
}

}  // namespace detail

/// Centerline-projection membership test for a single point against one branch segment range.
inline bool inside_branch(const Branch& b, const Vec3& p, double t_lo, double t_hi,
                          const RasterOptions& opt) {
  ProjectionOptions po;
  po.multistart = opt.multistart;
  const Projection pr = project(b.centerline, p, t_lo, t_hi, po);
  const double r = std::max(opt.r_min, b.radius.evaluate(pr.t_star));
  return pr.distance <= r;
}

/// Binary tube rasterization. A voxel (center at integer coordinates) is set when, for some
/// branch segment whose dilated box contains it, the nearest centerline point on that segment
/// lies within the radius evaluated there. Threads split the z axis; output does not depend on
/// the split.
inline LabelVolume rasterize(const VesselTree& tree, const Shape& shape, const RasterOptions& opt = {}) {
  check_shape(shape);
  LabelVolume out(shape, 0);
  const auto jobs = detail::plan_segments(tree, shape, opt.r_min);
  parallel_for(static_cast<std::size_t>(shape[2]), opt.threads, [&](std::size_t z0, std::size_t z1) {
    for (const auto& job : jobs) {
      const int zlo = std::max(job.lo[2], static_cast<int>(z0));
      const int zhi = std::min(job.hi[2], static_cast<int>(z1) - 1);
      for (int z = zlo; z <= zhi; ++z) {
        for (int y = job.lo[1]; y <= job.hi[1]; ++y) {
          for (int x = job.lo[0]; x <= job.hi[0]; ++x) {
            auto& v = out.at(x, y, z);
            if (v) continue;
            if (inside_branch(*job.branch, Vec3(x, y, z), job.t_lo, job.t_hi, opt)) v = 1;
          }
        }
      }
    }
  });
  return out;
}

inline double volume_fraction(const LabelVolume& v) {
  std::size_t n = 0;
  for (auto x : v.data) n += x;
  return v.size() ? static_cast<double>(n) / static_cast<double>(v.size()) : 0.0;
}

}  // namespace vsynth
