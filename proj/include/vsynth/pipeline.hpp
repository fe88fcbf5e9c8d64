#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vsynth/config.hpp"
#include "vsynth/digest.hpp"
#include "vsynth/oct_synth.hpp"
#include "vsynth/rasterizer.hpp"
#include "vsynth/rng.hpp"
#include "vsynth/tree.hpp"
#include "vsynth/version.hpp"
#include "vsynth/volume_io.hpp"

namespace vsynth {

inline Sample synthesize_image(const LabelVolume& label, const SynthesisConfig& config, std::uint64_t sample_seed) {
  Rng image_rng = make_rng(sample_seed, Stream::image);
  return synthesize_sample(label, config.texture, config.artifact, image_rng);
}

/// Label and image for one sample seed. Tree and image draw from separate streams of the
/// sample seed, so an image re-synthesized from a stored label with the same seed matches.
inline Sample generate_sample(const SynthesisConfig& config, std::uint64_t sample_seed, int raster_threads = 1) {
  Rng tree_rng = make_rng(sample_seed, Stream::tree);
  const VesselTree tree = sample_tree(config, tree_rng);
  LabelVolume label = rasterize(tree, config.volume_shape, raster_options(config, raster_threads));
  label.voxel_size = config.voxel_size;
  return synthesize_image(label, config, sample_seed);
}

struct SampleRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string image;  // relative to the manifest directory
  std::string label;
  std::string image_sha256;
  std::string label_sha256;
  double vessel_fraction = 0.0;
};

struct RunManifest {
  int schema_version = kSchemaVersion;
  std::string tool_version = kVersion;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  SynthesisConfig config;
  std::vector<SampleRecord> samples;
};

inline constexpr const char* kManifestName = "manifest.json";

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : m.samples) {
    samples.push_back({{"index", s.index},
                       {"seed", s.seed},
                       {"image", s.image},
                       {"label", s.label},
                       {"image_sha256", s.image_sha256},
                       {"label_sha256", s.label_sha256},
                       {"vessel_fraction", s.vessel_fraction}});
  }
  return {{"schema_version", m.schema_version},
          {"tool", "vsynth"},
          {"tool_version", m.tool_version},
          {"seed", m.seed},
          {"n_samples", m.n_samples},
          {"config", to_json(m.config)},
          {"samples", samples}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kSchemaVersion) throw DataError("manifest: unsupported schema_version");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_samples = j.at("n_samples").get<std::size_t>();
    m.config = config_from_json(j.at("config"));
    for (const auto& s : j.at("samples")) {
      m.samples.push_back({s.at("index").get<std::size_t>(), s.at("seed").get<std::uint64_t>(),
                           s.at("image").get<std::string>(), s.at("label").get<std::string>(),
                           s.at("image_sha256").get<std::string>(), s.at("label_sha256").get<std::string>(),
                           s.at("vessel_fraction").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  if (m.samples.size() != m.n_samples) throw DataError("manifest: sample count mismatch");
  return m;
}

inline RunManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

/// Recomputes every listed digest; returns the relative paths whose content does not match.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir, const RunManifest& m) {
  std::vector<std::string> bad;
  auto check = [&](const std::string& rel, const std::string& want) {
    const auto p = dir / rel;
    if (!std::filesystem::exists(p) || sha256_file(p) != want) bad.push_back(rel);
  };
  for (const auto& s : m.samples) {
    check(s.image, s.image_sha256);
    check(s.label, s.label_sha256);
  }
  return bad;
}

struct GenerateOptions {
  std::size_t n_samples = 1;
  int jobs = 1;
  std::string extension = ".nii.gz";
  /// Called after each sample is written (from worker threads).
  std::function<void(const SampleRecord&)> on_sample;
};

inline std::string sample_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%04zu", index);
  return buf;
}

/// Writes n (image, label) pairs plus manifest.json into out_dir. Sample i uses
/// split_seed(config.seed, i); the worker count never changes file content.
inline RunManifest generate_dataset(const SynthesisConfig& config, const std::filesystem::path& out_dir,
                                    const GenerateOptions& opt) {
  validate(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create " + out_dir.string() + ": " + ec.message());

  RunManifest m;
  m.seed = config.seed;
  m.n_samples = opt.n_samples;
  m.config = config;
  m.samples.resize(opt.n_samples);

  const int jobs = std::max(1, opt.jobs);
  const int workers = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(1, opt.n_samples)));
  const int raster_threads = std::max(1, jobs / workers);
  std::atomic<std::size_t> next{0};
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t, std::size_t) {
    for (std::size_t i = next++; i < opt.n_samples; i = next++) {
      SampleRecord rec;
      rec.index = i;
      rec.seed = split_seed(config.seed, i);
      const Sample s = generate_sample(config, rec.seed, raster_threads);
      const std::string stem = sample_stem(i);
      rec.image = stem + "_image" + opt.extension;
      rec.label = stem + "_label" + opt.extension;
      write_volume(out_dir / rec.image, s.image);
      write_volume(out_dir / rec.label, s.label);
      rec.image_sha256 = sha256_file(out_dir / rec.image);
      rec.label_sha256 = sha256_file(out_dir / rec.label);
      rec.vessel_fraction = volume_fraction(s.label);
      if (opt.on_sample) opt.on_sample(rec);
      m.samples[i] = std::move(rec);
    }
  });
  write_json_file(out_dir / kManifestName, to_json(m));
  return m;
}

}  // namespace vsynth
