#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vsynth/errors.hpp"

namespace vsynth {

using Shape = std::array<int, 3>;

inline std::size_t voxel_count(const Shape& s) {
  return static_cast<std::size_t>(s[0]) * static_cast<std::size_t>(s[1]) *
         static_cast<std::size_t>(s[2]);
}

inline void check_shape(const Shape& s) {
  for (int e : s) {
    if (e <= 0) throw ConfigError("volume extents must be positive");
  }
}

inline std::string shape_string(const Shape& s) {
  return std::to_string(s[0]) + "x" + std::to_string(s[1]) + "x" + std::to_string(s[2]);
}

/// Dense voxel grid, x fastest (NIfTI order). Isotropic voxel size.
template <typename T>
struct Volume {
  Shape shape{0, 0, 0};
  double voxel_size = 1.0;
  std::vector<T> data;

  Volume() = default;
  explicit Volume(const Shape& s, T fill = T{}, double vs = 1.0)
      : shape(s), voxel_size(vs), data((check_shape(s), voxel_count(s)), fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(shape[0]) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(shape[1]) * z);
  }
  T& at(int x, int y, int z) { return data[index(x, y, z)]; }
  const T& at(int x, int y, int z) const { return data[index(x, y, z)]; }

  bool operator==(const Volume&) const = default;
};

using LabelVolume = Volume<std::uint8_t>;
using IntensityVolume = Volume<float>;
using LabelMap = Volume<std::uint32_t>;

template <typename A, typename B>
void require_same_shape(const Volume<A>& a, const Volume<B>& b, const char* what) {
  if (a.shape != b.shape) {
    throw DataError(std::string(what) + ": shape mismatch " + shape_string(a.shape) + " vs " +
                    shape_string(b.shape));
  }
}

}  // namespace vsynth
