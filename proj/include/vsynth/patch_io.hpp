#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vsynth/config.hpp"
#include "vsynth/stitch.hpp"
#include "vsynth/volume_io.hpp"

namespace vsynth {

/// On-disk patch set: grid.json listing each patch file and its origin.
struct GridManifest {
  Shape volume_shape{};
  Shape patch_shape{};
  double overlap = 0.0;
  double voxel_size = 1.0;
  struct Entry {
    Origin origin{};
    std::string path;  // relative to the manifest directory
  };
  std::vector<Entry> patches;
};

inline constexpr const char* kGridName = "grid.json";

inline nlohmann::json to_json(const GridManifest& g) {
  nlohmann::json patches = nlohmann::json::array();
  for (const auto& p : g.patches) patches.push_back({{"origin", p.origin}, {"path", p.path}});
  return {{"schema_version", kSchemaVersion}, {"volume_shape", g.volume_shape}, {"patch_shape", g.patch_shape},
          {"overlap", g.overlap},             {"voxel_size", g.voxel_size},     {"patches", patches}};
}

inline GridManifest read_grid_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  GridManifest g;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("schema_version").get<int>() != kSchemaVersion) throw DataError("grid manifest: unsupported schema_version");
    g.volume_shape = j.at("volume_shape").get<Shape>();
    g.patch_shape = j.at("patch_shape").get<Shape>();
    g.overlap = j.value("overlap", 0.0);
    g.voxel_size = j.value("voxel_size", 1.0);
    for (const auto& p : j.at("patches")) g.patches.push_back({p.at("origin").get<Origin>(), p.at("path").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": malformed grid manifest (" + e.what() + ")");
  }
  check_shape(g.volume_shape);
  return g;
}

/// Cuts `vol` along plan_grid and writes float32 patches plus grid.json into `dir`.
template <typename T>
GridManifest write_patches(const Volume<T>& vol, const Shape& patch_shape, double overlap,
                           const std::filesystem::path& dir, const std::string& extension = ".nii.gz") {
  const PatchGrid grid = plan_grid(vol.shape, patch_shape, overlap);
  std::filesystem::create_directories(dir);
  GridManifest m{vol.shape, grid.patch_shape, overlap, vol.voxel_size, {}};
  for (std::size_t i = 0; i < grid.origins.size(); ++i) {
    const auto p = extract_patch(vol, grid.origins[i], grid.patch_shape);
    IntensityVolume f(p.shape, 0.0f, p.voxel_size);
    for (std::size_t k = 0; k < p.size(); ++k) f.data[k] = static_cast<float>(p.data[k]);
    char name[32];
    std::snprintf(name, sizeof name, "patch_%04zu", i);
    const std::string rel = name + extension;
    write_volume(dir / rel, f);
    m.patches.push_back({grid.origins[i], rel});
  }
  write_json_file(dir / kGridName, to_json(m));
  return m;
}

/// Reassembles the patch set described by a grid manifest.
inline Volume<double> stitch_from_manifest(const std::filesystem::path& manifest_path) {
  const GridManifest g = read_grid_manifest(manifest_path);
  const auto dir = manifest_path.parent_path();
  Stitcher s(g.volume_shape);
  for (const auto& e : g.patches) {
    const auto p = dir / e.path;
    if (!std::filesystem::exists(p)) throw DataError("missing patch file " + p.string());
    s.add(e.origin, read_image(p));
  }
  auto out = s.finish();
  out.voxel_size = g.voxel_size;
  return out;
}

}  // namespace vsynth
