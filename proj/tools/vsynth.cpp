// vsynth: synthetic vessel dataset generation, evaluation and patch stitching.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vsynth/config.hpp"
#include "vsynth/metrics.hpp"
#include "vsynth/patch_io.hpp"
#include "vsynth/pipeline.hpp"
#include "vsynth/render.hpp"
#include "vsynth/stitch.hpp"
#include "vsynth/version.hpp"
#include "vsynth/volume_io.hpp"

namespace fs = std::filesystem;
using namespace vsynth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct ConfigFlags {
  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::string shape;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Config file (JSON)");
    cmd->add_option("--preset", preset_name, "Shipped preset name (default: complex)");
    cmd->add_option("--set", overrides, "Override a config key, e.g. tree.n_trees.high=3");
    cmd->add_option("--shape", shape, "Volume shape: N or X,Y,Z");
    cmd->add_option("--seed", seed, "RNG seed");
  }

  SynthesisConfig resolve() const {
    if (!config_path.empty() && !preset_name.empty()) throw ConfigError("--config and --preset are exclusive");
    json doc = config_path.empty() ? preset_json(preset_name.empty() ? "complex" : preset_name)
                                   : read_json_file(config_path);
    for (const auto& o : overrides) apply_override(doc, o);
    if (!shape.empty()) doc["volume_shape"] = parse_shape(shape);
    if (seed) doc["seed"] = *seed;
    return config_from_json(doc);
  }

  static Shape parse_shape(const std::string& text) {
    std::vector<int> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
      try {
        std::size_t pos = 0;
        v.push_back(std::stoi(part, &pos));
        if (pos != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("--shape: cannot parse '" + text + "'");
      }
    }
    if (v.size() == 1) return {v[0], v[0], v[0]};
    if (v.size() != 3) throw ConfigError("--shape: expected N or X,Y,Z");
    return {v[0], v[1], v[2]};
  }
};

fs::path default_out(const std::string& leaf) {
  if (const char* root = std::getenv("VSYNTH_OUTPUT_ROOT"); root && *root) return fs::path(root) / leaf;
  return fs::path("vsynth_out") / leaf;
}

std::string extension_for(const std::string& format) {
  if (format == "nii.gz") return ".nii.gz";
  if (format == "nii") return ".nii";
  if (format == "raw") return ".raw";
  throw ConfigError("--format must be nii.gz, nii or raw");
}

LabelVolume load_binary(const fs::path& p, double level) {
  const auto h = read_header(p);
  if (h.dtype == DType::uint8) return read_label(p);
  return threshold(read_image(p), level);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic vascular label/image generation and evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // presets
  auto* presets_cmd = app.add_subcommand("presets", "List shipped presets or print one");
  std::string show;
  presets_cmd->add_option("--show", show, "Print the named preset");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate (image, label) pairs and a manifest");
  ConfigFlags gen_cfg;
  gen_cfg.attach(gen);
  std::size_t n_samples = 1;
  int jobs = 1;
  std::string gen_out, gen_format = "nii.gz";
  bool quiet = false;
  gen->add_option("-n,--n-samples", n_samples, "Number of samples");
  gen->add_option("--jobs", jobs, "Concurrent workers")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "Output directory (default $VSYNTH_OUTPUT_ROOT/dataset)");
  gen->add_option("--format", gen_format, "nii.gz | nii | raw");
  gen->add_flag("-q,--quiet", quiet, "No per-sample progress");

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "Render an image from an existing label volume");
  ConfigFlags syn_cfg;
  syn_cfg.attach(syn);
  std::string syn_label, syn_out;
  syn->add_option("--label", syn_label, "Binary label volume")->required();
  syn->add_option("--out", syn_out, "Output image path")->required();

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Dice / FPR / FNR between a prediction and a truth volume");
  std::string pred_path, truth_path, report_path;
  double ev_threshold = 0.5;
  ev->add_option("--pred", pred_path, "Prediction (uint8 label or float32 probability)")->required();
  ev->add_option("--truth", truth_path, "Ground-truth label")->required();
  ev->add_option("--report", report_path, "Write the report as JSON");
  ev->add_option("--threshold", ev_threshold, "Threshold for float predictions");

  // cut
  auto* cut = app.add_subcommand("cut", "Cut a volume into overlapping patches with grid.json");
  std::string cut_in, cut_out, cut_patch = "128";
  double cut_overlap = 0.5;
  cut->add_option("--in", cut_in, "Input volume")->required();
  cut->add_option("--out", cut_out, "Patch directory")->required();
  cut->add_option("--patch", cut_patch, "Patch shape: N or X,Y,Z");
  cut->add_option("--overlap", cut_overlap, "Overlap fraction in [0, 0.9]");

  // stitch
  auto* st = app.add_subcommand("stitch", "Sine-weighted reassembly of patches listed in grid.json");
  std::string grid_path, st_out, st_label_out;
  double st_threshold = 0.5;
  st->add_option("--grid", grid_path, "Grid manifest (grid.json) or its directory")->required();
  st->add_option("--out", st_out, "Stitched float32 volume")->required();
  st->add_option("--label-out", st_label_out, "Also write the thresholded label");
  st->add_option("--threshold", st_threshold, "Threshold for --label-out");

  // render
  auto* rd = app.add_subcommand("render", "Orthogonal-slice PNG contact sheet");
  std::string rd_image, rd_label, rd_out;
  rd->add_option("--image", rd_image, "Image or label volume")->required();
  rd->add_option("--label", rd_label, "Optional label overlay");
  rd->add_option("--out", rd_out, "PNG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*presets_cmd) {
      if (!show.empty()) {
        std::cout << preset_json(show).dump(2) << '\n';
      } else {
        for (const auto& name : list_presets()) std::cout << name << '\n';
      }
    } else if (*gen) {
      const SynthesisConfig cfg = gen_cfg.resolve();
      const fs::path out = gen_out.empty() ? default_out("dataset") : fs::path(gen_out);
      GenerateOptions opt;
      opt.n_samples = n_samples;
      opt.jobs = jobs;
      opt.extension = extension_for(gen_format);
      std::mutex log_mutex;
      if (!quiet) {
        opt.on_sample = [&](const SampleRecord& r) {
          std::lock_guard lock(log_mutex);
          std::cerr << "sample " << r.index << " vessel fraction " << r.vessel_fraction << '\n';
        };
      }
      const auto t0 = std::chrono::steady_clock::now();
      const auto m = generate_dataset(cfg, out, opt);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "wrote " << m.samples.size() << " samples to " << out.string() << " in " << secs << " s\n";
    } else if (*syn) {
      const SynthesisConfig cfg = syn_cfg.resolve();
      const LabelVolume label = read_label(syn_label);
      const Sample s = synthesize_image(label, cfg, cfg.seed);
      write_volume(syn_out, s.image);
    } else if (*ev) {
      const LabelVolume truth = read_label(truth_path);
      const LabelVolume pred = load_binary(pred_path, ev_threshold);
      const MetricsReport r = confusion(pred, truth);
      std::cout << format_table(r);
      if (!report_path.empty()) write_json_file(report_path, to_json(r));
    } else if (*cut) {
      const auto h = read_header(cut_in);
      const Shape patch = ConfigFlags::parse_shape(cut_patch);
      GridManifest m;
      if (h.dtype == DType::uint8) m = write_patches(read_volume<std::uint8_t>(cut_in), patch, cut_overlap, cut_out);
      else m = write_patches(read_image(cut_in), patch, cut_overlap, cut_out);
      std::cout << "wrote " << m.patches.size() << " patches to " << cut_out << '\n';
    } else if (*st) {
      fs::path g = grid_path;
      if (fs::is_directory(g)) g /= kGridName;
      const Volume<double> stitched = stitch_from_manifest(g);
      IntensityVolume out(stitched.shape, 0.0f, stitched.voxel_size);
      for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = static_cast<float>(stitched.data[i]);
      write_volume(st_out, out);
      if (!st_label_out.empty()) write_volume(st_label_out, threshold(stitched, st_threshold));
    } else if (*rd) {
      const auto h = read_header(rd_image);
      IntensityVolume img;
      if (h.dtype == DType::uint8) {
        const auto l = read_volume<std::uint8_t>(rd_image);
        img = IntensityVolume(l.shape, 0.0f, l.voxel_size);
        for (std::size_t i = 0; i < l.size(); ++i) img.data[i] = l.data[i];
      } else {
        img = read_image(rd_image);
      }
      std::optional<LabelVolume> label;
      if (!rd_label.empty()) label = read_label(rd_label);
      write_png(rd_out, contact_sheet(img, label ? &*label : nullptr));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}
