#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "vsynth/config.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

namespace detail {

// Linear interpolation stencil from an output axis of length n onto a grid axis of length g.
struct AxisStencil {
  std::vector<int> i0;
  std::vector<float> w1;
};

inline AxisStencil axis_stencil(int n, int g) {
  AxisStencil s;
  s.i0.resize(static_cast<std::size_t>(n));
  s.w1.resize(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    const double pos = n > 1 ? static_cast<double>(x) * (g - 1) / (n - 1) : 0.0;
    int i = std::min(static_cast<int>(pos), g - 2);
    s.i0[x] = i;
    s.w1[x] = static_cast<float>(pos - i);
  }
  return s;
}

}  // namespace detail

/// SynthMorph-style random partition: one low-resolution noise grid of side `smoothness`
/// per label, trilinearly upsampled; each voxel takes the label with the largest value.
inline LabelMap synth_label_map(const Shape& shape, int n_labels, int smoothness, Rng& rng) {
  if (n_labels < 1) throw ConfigError("label map: n_labels must be >= 1");
  if (smoothness < 2) throw ConfigError("label map: smoothness must be >= 2");
  check_shape(shape);
  LabelMap out(shape, 0);
  if (n_labels == 1) return out;

  const int g = smoothness;
  const std::size_t cells = static_cast<std::size_t>(g) * g * g;
  std::vector<float> grids(cells * static_cast<std::size_t>(n_labels));
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  for (auto& v : grids) v = gauss(rng);

  const auto sx = detail::axis_stencil(shape[0], g);
  const auto sy = detail::axis_stencil(shape[1], g);
  const auto sz = detail::axis_stencil(shape[2], g);
  for (int z = 0; z < shape[2]; ++z) {
    const int iz = sz.i0[z];
    const float wz = sz.w1[z];
    for (int y = 0; y < shape[1]; ++y) {
      const int iy = sy.i0[y];
      const float wy = sy.w1[y];
      for (int x = 0; x < shape[0]; ++x) {
        const int ix = sx.i0[x];
        const float wx = sx.w1[x];
        float best = -std::numeric_limits<float>::infinity();
        std::uint32_t best_label = 0;
        for (int l = 0; l < n_labels; ++l) {
          const float* gl = grids.data() + cells * static_cast<std::size_t>(l);
          auto at = [&](int a, int b, int c) {
            return gl[static_cast<std::size_t>(a) + static_cast<std::size_t>(g) * (b + static_cast<std::size_t>(g) * c)];
          };
          const float c00 = at(ix, iy, iz) * (1 - wx) + at(ix + 1, iy, iz) * wx;
          const float c10 = at(ix, iy + 1, iz) * (1 - wx) + at(ix + 1, iy + 1, iz) * wx;
          const float c01 = at(ix, iy, iz + 1) * (1 - wx) + at(ix + 1, iy, iz + 1) * wx;
          const float c11 = at(ix, iy + 1, iz + 1) * (1 - wx) + at(ix + 1, iy + 1, iz + 1) * wx;
          const float c0 = c00 * (1 - wy) + c10 * wy;
          const float c1 = c01 * (1 - wy) + c11 * wy;
          const float v = c0 * (1 - wz) + c1 * wz;
          if (v > best) {
            best = v;
            best_label = static_cast<std::uint32_t>(l);
          }
        }
        out.at(x, y, z) = best_label;
      }
    }
  }
  return out;
}

/// One U[0,1] intensity per label id (drawn in id order), painted onto the map.
inline IntensityVolume assign_intensities(const LabelMap& labels, Rng& rng) {
  std::uint32_t max_label = 0;
  for (auto l : labels.data) max_label = std::max(max_label, l);
  std::vector<float> lut(static_cast<std::size_t>(max_label) + 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : lut) v = static_cast<float>(u(rng));
  IntensityVolume out(labels.shape, 0.0f, labels.voxel_size);
  for (std::size_t i = 0; i < labels.size(); ++i) out.data[i] = lut[labels.data[i]];
  return out;
}

/// Vessel voxels take parenchyma * vessel texture; everything else keeps the parenchyma.
inline IntensityVolume fuse(const IntensityVolume& parenchyma, const IntensityVolume& vessel_texture,
                            const LabelVolume& mask) {
  require_same_shape(parenchyma, vessel_texture, "fuse");
  require_same_shape(parenchyma, mask, "fuse");
  IntensityVolume out = parenchyma;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (mask.data[i]) out.data[i] = parenchyma.data[i] * vessel_texture.data[i];
  }
  return out;
}

/// Per-slice gain along the slab axis: consecutive slabs of sampled thickness, each with its
/// own gain times a quadratic depth-of-focus profile 1 - a (u - focus)^2, u in [0, 1].
inline std::vector<double> sample_slab_field(int extent, const ArtifactConfig& cfg, Rng& rng) {
  std::vector<double> gains;
  gains.reserve(static_cast<std::size_t>(extent));
  while (static_cast<int>(gains.size()) < extent) {
    const long long thickness = std::max<long long>(1, cfg.slab_thickness.sample_int(rng));
    const double gain = cfg.slab_gain.sample(rng);
    const double strength = cfg.profile_strength.sample(rng);
    const double focus = cfg.focus_depth.sample(rng);
    for (long long d = 0; d < thickness && static_cast<int>(gains.size()) < extent; ++d) {
      const double u = thickness > 1 ? static_cast<double>(d) / static_cast<double>(thickness - 1) : 0.5;
      gains.push_back(gain * (1.0 - strength * (u - focus) * (u - focus)));
    }
  }
  return gains;
}

inline IntensityVolume apply_slab_field(const IntensityVolume& vol, int axis,
                                        const std::vector<double>& gains) {
  if (axis < 0 || axis > 2) throw ConfigError("slab axis must be 0, 1 or 2");
  if (gains.size() != static_cast<std::size_t>(vol.shape[axis])) {
    throw DataError("slab field length does not match the volume extent");
  }
  IntensityVolume out = vol;
  for (int z = 0; z < vol.shape[2]; ++z) {
    for (int y = 0; y < vol.shape[1]; ++y) {
      for (int x = 0; x < vol.shape[0]; ++x) {
        const int c[3] = {x, y, z};
        float& v = out.at(x, y, z);
        v = static_cast<float>(v * gains[static_cast<std::size_t>(c[axis])]);
      }
    }
  }
  return out;
}

inline IntensityVolume apply_slab_bias(const IntensityVolume& vol, const ArtifactConfig& cfg, Rng& rng) {
  const auto gains = sample_slab_field(vol.shape[cfg.slab_axis], cfg, rng);
  return apply_slab_field(vol, cfg.slab_axis, gains);
}

/// i.i.d. Gamma(k, 1/k) samples (mean 1, variance 1/k).
inline std::vector<double> sample_speckle_noise(std::size_t n, double shape_k, Rng& rng) {
  if (!(shape_k > 0)) throw ConfigError("speckle shape must be > 0");
  std::gamma_distribution<double> gamma(shape_k, 1.0 / shape_k);
  std::vector<double> g(n);
  for (auto& v : g) v = gamma(rng);
  return g;
}

/// vol * ((1 - blend) + blend * G), without rescaling.
inline IntensityVolume multiply_speckle(const IntensityVolume& vol, double shape_k, double blend, Rng& rng) {
  const auto g = sample_speckle_noise(vol.size(), shape_k, rng);
  IntensityVolume out = vol;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data[i] = static_cast<float>(out.data[i] * ((1.0 - blend) + blend * g[i]));
  }
  return out;
}

/// Min-max rescale to [0, 1]; a constant volume maps to all zeros.
inline IntensityVolume rescale_unit(IntensityVolume vol) {
  if (vol.data.empty()) return vol;
  const auto [mn, mx] = std::minmax_element(vol.data.begin(), vol.data.end());
  const double lo = *mn, hi = *mx;
  if (!(hi > lo)) {
    std::fill(vol.data.begin(), vol.data.end(), 0.0f);
    return vol;
  }
  const double inv = 1.0 / (hi - lo);
  for (auto& v : vol.data) v = static_cast<float>(std::clamp((v - lo) * inv, 0.0, 1.0));
  return vol;
}

inline IntensityVolume apply_speckle(const IntensityVolume& vol, const ArtifactConfig& cfg, Rng& rng) {
  const double k = cfg.speckle_shape.sample(rng);
  const double blend = cfg.noise_blend.sample(rng);
  return rescale_unit(multiply_speckle(vol, k, blend, rng));
}

/// Every intermediate of one image synthesis, in pipeline order.
struct SynthesisStages {
  LabelMap parenchyma_labels;
  LabelMap vessel_labels;
  IntensityVolume parenchyma;
  IntensityVolume vessel_texture;
  IntensityVolume fused;
  IntensityVolume biased;
  IntensityVolume image;
};

inline SynthesisStages synthesize_stages(const LabelVolume& label, const TextureConfig& texture,
                                         const ArtifactConfig& artifact, Rng& rng) {
  SynthesisStages s;
  const auto draw_map = [&] {
    const int n = static_cast<int>(texture.n_labels.sample_int(rng));
    const int g = static_cast<int>(texture.smoothness.sample_int(rng));
    return synth_label_map(label.shape, n, g, rng);
  };
  s.parenchyma_labels = draw_map();
  s.vessel_labels = draw_map();
  s.parenchyma = assign_intensities(s.parenchyma_labels, rng);
  s.vessel_texture = assign_intensities(s.vessel_labels, rng);
  s.fused = fuse(s.parenchyma, s.vessel_texture, label);
  s.biased = apply_slab_bias(s.fused, artifact, rng);
  s.image = apply_speckle(s.biased, artifact, rng);
  s.image.voxel_size = label.voxel_size;
  return s;
}

struct Sample {
  IntensityVolume image;
  LabelVolume label;
};

/// Image rendered from `label`; the label is returned unchanged alongside it.
inline Sample synthesize_sample(const LabelVolume& label, const TextureConfig& texture,
                                const ArtifactConfig& artifact, Rng& rng) {
  auto stages = synthesize_stages(label, texture, artifact, rng);
  return {std::move(stages.image), label};
}

}  // namespace vsynth
