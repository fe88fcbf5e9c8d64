#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

#include "vsynth/errors.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

using Origin = std::array<int, 3>;

/// w_i = sin^2(pi (i + 0.5) / n). Strictly positive, symmetric, and sums to 1 with its
/// half-length shift.
inline std::vector<double> sine_window_1d(int n) {
  if (n < 2) throw ConfigError("sine window: extent must be >= 2");
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = std::sin(std::numbers::pi * (i + 0.5) / n);
    w[static_cast<std::size_t>(i)] = s * s;
  }
  // Mirror so the symmetry holds bit-for-bit.
  for (int i = 0; i < n / 2; ++i) w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  return w;
}

inline Volume<double> sine_window(const Shape& patch_shape) {
  const auto wx = sine_window_1d(patch_shape[0]);
  const auto wy = sine_window_1d(patch_shape[1]);
  const auto wz = sine_window_1d(patch_shape[2]);
  Volume<double> w(patch_shape, 0.0);
  for (int z = 0; z < patch_shape[2]; ++z)
    for (int y = 0; y < patch_shape[1]; ++y)
      for (int x = 0; x < patch_shape[0]; ++x) w.at(x, y, z) = wx[x] * wy[y] * wz[z];
  return w;
}

struct PatchGrid {
  Shape volume_shape{};
  Shape patch_shape{};
  Shape stride{};
  std::vector<Origin> origins;
};

/// Origins per axis at stride patch * (1 - overlap); the final origin is pulled back so the
/// last patch ends exactly at the volume boundary. Patches larger than the volume are clipped.
inline std::vector<int> plan_axis(int volume, int patch, int stride) {
  std::vector<int> o;
  int pos = 0;
  while (pos + patch < volume) {
    o.push_back(pos);
    pos += stride;
  }
  const int last = volume - patch;
  if (o.empty() || o.back() != last) o.push_back(last);
  return o;
}

inline PatchGrid plan_grid(const Shape& volume_shape, const Shape& patch_shape, double overlap) {
  if (!(overlap >= 0.0 && overlap <= 0.9)) throw ConfigError("overlap must be in [0, 0.9]");
  check_shape(volume_shape);
  check_shape(patch_shape);
  PatchGrid g;
  g.volume_shape = volume_shape;
  std::array<std::vector<int>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    g.patch_shape[a] = std::min(patch_shape[a], volume_shape[a]);
    g.stride[a] = std::max(1, static_cast<int>(std::floor(g.patch_shape[a] * (1.0 - overlap) + 1e-9)));
    axes[a] = plan_axis(volume_shape[a], g.patch_shape[a], g.stride[a]);
  }
  for (int z : axes[2])
    for (int y : axes[1])
      for (int x : axes[0]) g.origins.push_back({x, y, z});
  return g;
}

template <typename T>
Volume<T> extract_patch(const Volume<T>& vol, const Origin& origin, const Shape& patch_shape) {
  for (int a = 0; a < 3; ++a) {
    if (origin[a] < 0 || origin[a] + patch_shape[a] > vol.shape[a]) {
      throw DataError("patch extends outside the volume");
    }
  }
  Volume<T> p(patch_shape, T{}, vol.voxel_size);
  for (int z = 0; z < patch_shape[2]; ++z)
    for (int y = 0; y < patch_shape[1]; ++y)
      for (int x = 0; x < patch_shape[0]; ++x)
        p.at(x, y, z) = vol.at(origin[0] + x, origin[1] + y, origin[2] + z);
  return p;
}

/// Incremental sine-weighted averaging of overlapping patches.
///
/// Each voxel accumulates weighted deviations from the first value it received, so voxels
/// whose patches all agree reproduce that value exactly.
class Stitcher {
 public:
  explicit Stitcher(const Shape& out_shape)
      : reference_(out_shape, 0.0), numerator_(out_shape, 0.0), weight_(out_shape, 0.0) {}

  template <typename T>
  void add(const Origin& origin, const Volume<T>& patch) {
    for (int a = 0; a < 3; ++a) {
      if (origin[a] < 0 || origin[a] + patch.shape[a] > numerator_.shape[a]) {
        throw DataError("patch at origin (" + std::to_string(origin[0]) + "," + std::to_string(origin[1]) +
                        "," + std::to_string(origin[2]) + ") extends outside the output volume");
      }
    }
    const Volume<double>& w = window(patch.shape);
    for (int z = 0; z < patch.shape[2]; ++z)
      for (int y = 0; y < patch.shape[1]; ++y)
        for (int x = 0; x < patch.shape[0]; ++x) {
          const double wv = w.at(x, y, z);
          const std::size_t i = numerator_.index(origin[0] + x, origin[1] + y, origin[2] + z);
          const double v = static_cast<double>(patch.at(x, y, z));
          if (weight_.data[i] == 0.0) reference_.data[i] = v;
          numerator_.data[i] += wv * (v - reference_.data[i]);
          weight_.data[i] += wv;
        }
  }

  /// Weighted average; any voxel no patch touched is an error.
  Volume<double> finish() const {
    Volume<double> out(numerator_.shape, 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(weight_.data[i] > 0.0)) {
        const auto& s = out.shape;
        const std::size_t x = i % s[0], y = (i / s[0]) % s[1], z = i / (static_cast<std::size_t>(s[0]) * s[1]);
        throw DataError("coverage gap at voxel (" + std::to_string(x) + "," + std::to_string(y) + "," +
                        std::to_string(z) + ")");
      }
      out.data[i] = reference_.data[i] + numerator_.data[i] / weight_.data[i];
    }
    return out;
  }

 private:
  const Volume<double>& window(const Shape& s) {
    auto it = windows_.find(s);
    if (it == windows_.end()) it = windows_.emplace(s, sine_window(s)).first;
    return it->second;
  }

  Volume<double> reference_;
  Volume<double> numerator_;
  Volume<double> weight_;
  std::map<Shape, Volume<double>> windows_;
};

template <typename T>
struct Patch {
  Origin origin{};
  Volume<T> values;
};

template <typename T>
Volume<double> stitch(const std::vector<Patch<T>>& patches, const Shape& out_shape) {
  Stitcher s(out_shape);
  for (const auto& p : patches) s.add(p.origin, p.values);
  return s.finish();
}

template <typename T>
Volume<double> stitch(const std::vector<Patch<T>>& patches, const PatchGrid& grid, const Shape& out_shape) {
  for (const auto& p : patches) {
    if (p.values.shape != grid.patch_shape) throw DataError("patch shape does not match the grid");
  }
  return stitch(patches, out_shape);
}

template <typename T>
LabelVolume threshold(const Volume<T>& v, double level = 0.5) {
  LabelVolume out(v.shape, 0, v.voxel_size);
  for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = static_cast<double>(v.data[i]) >= level ? 1 : 0;
  return out;
}

}  // namespace vsynth
