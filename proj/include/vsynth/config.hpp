#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vsynth/errors.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum class DistributionKind { uniform, log_uniform, integer_uniform };

inline const char* to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::uniform: return "uniform";
    case DistributionKind::log_uniform: return "log-uniform";
    case DistributionKind::integer_uniform: return "integer-uniform";
  }
  return "uniform";
}

struct Distribution {
  DistributionKind kind = DistributionKind::uniform;
  double low = 0.0;
  double high = 0.0;

  static Distribution constant(double v) { return {DistributionKind::uniform, v, v}; }
  static Distribution uniform(double lo, double hi) { return {DistributionKind::uniform, lo, hi}; }
  static Distribution log_uniform(double lo, double hi) {
    return {DistributionKind::log_uniform, lo, hi};
  }
  static Distribution integer(long long lo, long long hi) {
    return {DistributionKind::integer_uniform, static_cast<double>(lo), static_cast<double>(hi)};
  }

  /// Throws ConfigError prefixed with `path` when the bounds are unusable.
  void validate(const std::string& path) const {
    if (!std::isfinite(low) || !std::isfinite(high)) throw ConfigError(path + ": bounds must be finite");
    if (low > high) throw ConfigError(path + ": low > high");
    if (kind == DistributionKind::log_uniform && low <= 0.0) {
      throw ConfigError(path + ": log-uniform requires low > 0");
    }
    if (kind == DistributionKind::integer_uniform &&
        (low != std::floor(low) || high != std::floor(high))) {
      throw ConfigError(path + ": integer-uniform bounds must be integers");
    }
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case DistributionKind::uniform:
        return low == high ? low : std::uniform_real_distribution<double>(low, high)(rng);
      case DistributionKind::log_uniform:
        return low == high ? low
                           : std::exp(std::uniform_real_distribution<double>(std::log(low),
                                                                             std::log(high))(rng));
      case DistributionKind::integer_uniform:
        return static_cast<double>(std::uniform_int_distribution<long long>(
            static_cast<long long>(low), static_cast<long long>(high))(rng));
    }
    return low;
  }

  long long sample_int(Rng& rng) const {
    if (kind == DistributionKind::integer_uniform) return static_cast<long long>(sample(rng));
    return std::llround(sample(rng));
  }

  bool contained_in(const Distribution& outer) const {
    return outer.low <= low && high <= outer.high;
  }
  bool strictly_inside(const Distribution& outer) const {
    return outer.low < low && high < outer.high;
  }

  bool operator==(const Distribution&) const = default;
};

/// Tree geometry hyper-parameters. Lengths and radii in voxels.
struct TreeConfig {
  Distribution n_trees = Distribution::integer(1, 1);
  Distribution max_depth = Distribution::integer(0, 0);
  Distribution n_control_points = Distribution::integer(0, 0);
  Distribution jitter_magnitude = Distribution::constant(0.0);
  Distribution root_radius = Distribution::constant(2.0);
  Distribution radius_ratio = Distribution::constant(0.7);
  Distribution radius_variation = Distribution::constant(0.0);
  Distribution n_children = Distribution::integer(0, 0);
  bool operator==(const TreeConfig&) const = default;
};

struct RasterConfig {
  double r_min = 0.5;
  int multistart = 8;
  bool operator==(const RasterConfig&) const = default;
};

struct TextureConfig {
  Distribution n_labels = Distribution::integer(4, 4);
  /// Side length of the low-resolution noise grid; larger means smaller blobs.
  Distribution smoothness = Distribution::integer(4, 4);
  bool operator==(const TextureConfig&) const = default;
};

struct ArtifactConfig {
  int slab_axis = 2;
  Distribution slab_thickness = Distribution::integer(16, 16);
  Distribution slab_gain = Distribution::constant(1.0);
  /// Depth-of-focus falloff: gain at distance |u - focus| is 1 - strength * (u - focus)^2.
  Distribution profile_strength = Distribution::constant(0.0);
  Distribution focus_depth = Distribution::constant(0.5);
  Distribution speckle_shape = Distribution::constant(4.0);
  Distribution noise_blend = Distribution::constant(1.0);
  bool operator==(const ArtifactConfig&) const = default;
};

/// Complete declarative configuration for one dataset.
struct SynthesisConfig {
  int schema_version = kSchemaVersion;
  std::string name;
  Shape volume_shape{128, 128, 128};
  double voxel_size = 1.0;
  std::uint64_t seed = 0;
  TreeConfig tree;
  RasterConfig raster;
  TextureConfig texture;
  ArtifactConfig artifact;
  bool operator==(const SynthesisConfig&) const = default;
};

/// Visits every Distribution of a config with its dotted path.
template <typename Config, typename Fn>
void for_each_distribution(Config& c, Fn&& fn) {
  fn("tree.n_trees", c.tree.n_trees);
  fn("tree.max_depth", c.tree.max_depth);
  fn("tree.n_control_points", c.tree.n_control_points);
  fn("tree.jitter_magnitude", c.tree.jitter_magnitude);
  fn("tree.root_radius", c.tree.root_radius);
  fn("tree.radius_ratio", c.tree.radius_ratio);
  fn("tree.radius_variation", c.tree.radius_variation);
  fn("tree.n_children", c.tree.n_children);
  fn("texture.n_labels", c.texture.n_labels);
  fn("texture.smoothness", c.texture.smoothness);
  fn("artifact.slab_thickness", c.artifact.slab_thickness);
  fn("artifact.slab_gain", c.artifact.slab_gain);
  fn("artifact.profile_strength", c.artifact.profile_strength);
  fn("artifact.focus_depth", c.artifact.focus_depth);
  fn("artifact.speckle_shape", c.artifact.speckle_shape);
  fn("artifact.noise_blend", c.artifact.noise_blend);
}

inline void validate(const SynthesisConfig& c) {
  if (c.schema_version != kSchemaVersion) {
    throw ConfigError("schema_version: unsupported version " + std::to_string(c.schema_version));
  }
  for (int a = 0; a < 3; ++a) {
    if (c.volume_shape[a] <= 0) throw ConfigError("volume_shape: extents must be positive");
  }
  if (!(c.voxel_size > 0.0)) throw ConfigError("voxel_size: must be > 0");
  for_each_distribution(c, [](const char* path, const Distribution& d) { d.validate(path); });

  auto at_least = [](const char* path, const Distribution& d, double bound) {
    if (d.low < bound) throw ConfigError(std::string(path) + ": low must be >= " + std::to_string(bound));
  };
  auto above = [](const char* path, const Distribution& d, double bound) {
    if (!(d.low > bound)) throw ConfigError(std::string(path) + ": low must be > " + std::to_string(bound));
  };
  at_least("tree.n_trees", c.tree.n_trees, 0);
  at_least("tree.max_depth", c.tree.max_depth, 0);
  at_least("tree.n_control_points", c.tree.n_control_points, 0);
  at_least("tree.jitter_magnitude", c.tree.jitter_magnitude, 0);
  above("tree.root_radius", c.tree.root_radius, 0);
  above("tree.radius_ratio", c.tree.radius_ratio, 0);
  at_least("tree.radius_variation", c.tree.radius_variation, 0);
  if (c.tree.radius_variation.high >= 1.0) throw ConfigError("tree.radius_variation: high must be < 1");
  at_least("tree.n_children", c.tree.n_children, 0);
  if (!(c.raster.r_min > 0.0)) throw ConfigError("raster.r_min: must be > 0");
  if (c.raster.multistart < 1) throw ConfigError("raster.multistart: must be >= 1");
  at_least("texture.n_labels", c.texture.n_labels, 1);
  at_least("texture.smoothness", c.texture.smoothness, 2);
  if (c.artifact.slab_axis < 0 || c.artifact.slab_axis > 2) throw ConfigError("artifact.slab_axis: must be 0, 1 or 2");
  at_least("artifact.slab_thickness", c.artifact.slab_thickness, 1);
  above("artifact.slab_gain", c.artifact.slab_gain, 0);
  at_least("artifact.profile_strength", c.artifact.profile_strength, 0);
  if (c.artifact.profile_strength.high >= 1.0) throw ConfigError("artifact.profile_strength: high must be < 1");
  at_least("artifact.focus_depth", c.artifact.focus_depth, 0);
  if (c.artifact.focus_depth.high > 1.0) throw ConfigError("artifact.focus_depth: high must be <= 1");
  above("artifact.speckle_shape", c.artifact.speckle_shape, 0);
  at_least("artifact.noise_blend", c.artifact.noise_blend, 0);
  if (c.artifact.noise_blend.high > 1.0) throw ConfigError("artifact.noise_blend: high must be <= 1");
}

// ---- JSON mapping -------------------------------------------------------------------------

inline json to_json(const Distribution& d) {
  return json{{"kind", to_string(d.kind)}, {"low", d.low}, {"high", d.high}};
}

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(child(key) + ": wrong type");
    }
  }

  void distribution(const char* key, Distribution& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    const std::string p = child(key);
    if (it->is_number()) {
      out = Distribution::constant(it->get<double>());
      return;
    }
    Reader r(*it, p);
    std::string kind = to_string(out.kind);
    r.get("kind", kind);
    if (kind == "uniform") out.kind = DistributionKind::uniform;
    else if (kind == "log-uniform") out.kind = DistributionKind::log_uniform;
    else if (kind == "integer-uniform") out.kind = DistributionKind::integer_uniform;
    else throw ConfigError(p + ".kind: unknown distribution kind '" + kind + "'");
    r.get("low", out.low);
    r.get("high", out.high);
    r.finish();
  }

  Reader object(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    static const json empty = json::object();
    return Reader(it == j_.end() ? empty : *it, child(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(child(k.c_str()) + ": unknown key");
    }
  }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline json to_json(const SynthesisConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["name"] = c.name;
  j["volume_shape"] = c.volume_shape;
  j["voxel_size"] = c.voxel_size;
  j["seed"] = c.seed;
  j["tree"] = {
      {"n_trees", to_json(c.tree.n_trees)},
      {"max_depth", to_json(c.tree.max_depth)},
      {"n_control_points", to_json(c.tree.n_control_points)},
      {"jitter_magnitude", to_json(c.tree.jitter_magnitude)},
      {"root_radius", to_json(c.tree.root_radius)},
      {"radius_ratio", to_json(c.tree.radius_ratio)},
      {"radius_variation", to_json(c.tree.radius_variation)},
      {"n_children", to_json(c.tree.n_children)},
  };
  j["raster"] = {{"r_min", c.raster.r_min}, {"multistart", c.raster.multistart}};
  j["texture"] = {{"n_labels", to_json(c.texture.n_labels)},
                  {"smoothness", to_json(c.texture.smoothness)}};
  j["artifact"] = {
      {"slab_axis", c.artifact.slab_axis},
      {"slab_thickness", to_json(c.artifact.slab_thickness)},
      {"slab_gain", to_json(c.artifact.slab_gain)},
      {"profile_strength", to_json(c.artifact.profile_strength)},
      {"focus_depth", to_json(c.artifact.focus_depth)},
      {"speckle_shape", to_json(c.artifact.speckle_shape)},
      {"noise_blend", to_json(c.artifact.noise_blend)},
  };
  return j;
}

/// Parses and validates. Missing keys keep their defaults; unknown keys are rejected.
inline SynthesisConfig config_from_json(const json& j) {
  SynthesisConfig c;
  detail::Reader r(j, "");
  r.get("schema_version", c.schema_version);
  r.get("name", c.name);
  r.get("volume_shape", c.volume_shape);
  r.get("voxel_size", c.voxel_size);
  r.get("seed", c.seed);
  {
    auto t = r.object("tree");
    t.distribution("n_trees", c.tree.n_trees);
    t.distribution("max_depth", c.tree.max_depth);
    t.distribution("n_control_points", c.tree.n_control_points);
    t.distribution("jitter_magnitude", c.tree.jitter_magnitude);
    t.distribution("root_radius", c.tree.root_radius);
    t.distribution("radius_ratio", c.tree.radius_ratio);
    t.distribution("radius_variation", c.tree.radius_variation);
    t.distribution("n_children", c.tree.n_children);
    t.finish();
  }
  {
    auto t = r.object("raster");
    t.get("r_min", c.raster.r_min);
    t.get("multistart", c.raster.multistart);
    t.finish();
  }
  {
    auto t = r.object("texture");
    t.distribution("n_labels", c.texture.n_labels);
    t.distribution("smoothness", c.texture.smoothness);
    t.finish();
  }
  {
    auto t = r.object("artifact");
    t.get("slab_axis", c.artifact.slab_axis);
    t.distribution("slab_thickness", c.artifact.slab_thickness);
    t.distribution("slab_gain", c.artifact.slab_gain);
    t.distribution("profile_strength", c.artifact.profile_strength);
    t.distribution("focus_depth", c.artifact.focus_depth);
    t.distribution("speckle_shape", c.artifact.speckle_shape);
    t.distribution("noise_blend", c.artifact.noise_blend);
    t.finish();
  }
  r.finish();
  validate(c);
  return c;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

inline SynthesisConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json_file(path));
}

/// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when possible and
/// kept as a string otherwise.
inline void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key.path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw ConfigError(path + ": '" + parts[i] + "' is not an object");
    node = &(*node)[parts[i]];
    if (node->is_number() && i + 2 == parts.size()) {
      // Scalar shorthand distribution being refined field-by-field.
      *node = json{{"kind", "uniform"}, {"low", *node}, {"high", *node}};
    }
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError(path + ": parent is not an object");
  (*node)[parts.back()] = value;
}

// ---- presets ------------------------------------------------------------------------------

inline std::filesystem::path preset_directory() {
  if (const char* env = std::getenv("VSYNTH_PRESET_DIR"); env && *env) return env;
#ifdef VSYNTH_DEFAULT_PRESET_DIR
  return VSYNTH_DEFAULT_PRESET_DIR;
#else
  return "presets";
#endif
}

inline std::vector<std::string> list_presets(const std::filesystem::path& dir = preset_directory()) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec)) {
    if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

inline json preset_json(const std::string& name, const std::filesystem::path& dir = preset_directory()) {
  const auto file = dir / (name + ".json");
  if (name.empty() || name.find('/') != std::string::npos || !std::filesystem::exists(file)) {
    throw ConfigError("unknown preset '" + name + "' (looked in " + dir.string() + ")");
  }
  return read_json_file(file);
}

inline SynthesisConfig preset(const std::string& name,
                              const std::filesystem::path& dir = preset_directory()) {
  return config_from_json(preset_json(name, dir));
}

}  // namespace vsynth
