// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>

#include "test_support.hpp"
#include "vsynth/metrics.hpp"
#include "vsynth/pipeline.hpp"
#include "vsynth/rasterizer.hpp"
#include "vsynth/stitch.hpp"

using namespace vsynth;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every regular file under `dir`, keyed by name.
std::map<std::string, std::string> dataset_bytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

void rasterizer_oracle() {
  SynthesisConfig c;
  c.volume_shape = {48, 48, 48};
  c.tree.n_trees = Distribution::integer(1, 2);
  c.tree.max_depth = Distribution::integer(0, 1);
  c.tree.n_children = Distribution::integer(0, 1);
  c.tree.n_control_points = Distribution::integer(0, 4);
  c.tree.jitter_magnitude = Distribution::uniform(0.0, 4.0);
  c.tree.root_radius = Distribution::uniform(1.0, 5.0);
  c.tree.radius_ratio = Distribution::uniform(0.4, 1.0);
  c.tree.radius_variation = Distribution::uniform(0.0, 0.3);

  const auto t0 = Clock::now();
  double worst = 1.0;
  int trees = 0;
  for (std::uint64_t seed = 0; trees < 20; ++seed) {
    auto rng = make_rng(seed);
    const auto tree = sample_tree(c, rng);
    if (tree.branches.size() > 4) continue;
    const auto got = rasterize(tree, c.volume_shape);
    const auto want = testing::brute_force_rasterize(tree, c.volume_shape, c.raster.r_min);
    std::size_t same = 0;
    for (std::size_t i = 0; i < got.size(); ++i) same += got.data[i] == want.data[i];
    worst = std::min(worst, static_cast<double>(same) / got.size());
    ++trees;
  }
  const double secs = seconds_since(t0);
  report("rasterizer_oracle", worst >= 0.999 && secs < 60.0,
         fmt("trees=%d min_agreement=%.6f runtime=%.1fs (need >=0.999, <60s)", trees, worst, secs));
}

void projection_optimality() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 40.0);
  std::uniform_int_distribution<int> npts(2, 9);
  double worst_excess = -1e300;
  std::vector<int> iterations;
  for (int s = 0; s < 10; ++s) {
    std::vector<Vec3> pts(static_cast<std::size_t>(npts(rng)));
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    const Spline3 spline(pts);
    for (int q = 0; q < 100; ++q) {
      const Vec3 query(u(rng), u(rng), u(rng));
      const auto gn = project(spline, query);
      const auto dense = testing::dense_projection(spline, query);
      worst_excess = std::max(worst_excess, gn.distance - dense.distance);
      iterations.push_back(gn.iterations);
    }
  }
  std::nth_element(iterations.begin(), iterations.begin() + iterations.size() / 2, iterations.end());
  const int median = iterations[iterations.size() / 2];
  report("projection_optimality", worst_excess <= 1e-4 && median <= 10,
         fmt("max(gn-dense)=%.3g median_iterations=%d (need <=1e-4, <=10)", worst_excess, median));
}

void dark_vessels() {
  auto c = preset("complex");
  c.volume_shape = {48, 48, 48};
  std::size_t violations = 0, vessel_voxels = 0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const std::uint64_t seed = split_seed(99, i);
    auto tree_rng = make_rng(seed, Stream::tree);
    const auto label = rasterize(sample_tree(c, tree_rng), c.volume_shape);
    auto rng = make_rng(seed, Stream::image);
    const auto st = synthesize_stages(label, c.texture, c.artifact, rng);
    for (std::size_t v = 0; v < label.size(); ++v) {
      if (!label.data[v]) continue;
      ++vessel_voxels;
      violations += st.fused.data[v] > st.parenchyma.data[v];
    }
  }
  report("dark_vessel_invariant", violations == 0 && vessel_voxels > 0,
         fmt("samples=100 vessel_voxels=%zu violations=%zu", vessel_voxels, violations));
}

void stitch_round_trip() {
  const Shape shape{160, 160, 160};
  Volume<double> v(shape, 0.0);
  for (int z = 0; z < 160; ++z)
    for (int y = 0; y < 160; ++y)
      for (int x = 0; x < 160; ++x)
        v.at(x, y, z) = std::sin(0.05 * x) * std::cos(0.03 * y) + 0.5 * std::sin(0.02 * z + 0.3 * x / 160.0);
  const auto grid = plan_grid(shape, {128, 128, 128}, 0.5);
  std::vector<Patch<double>> patches;
  for (const auto& o : grid.origins) patches.push_back({o, extract_patch(v, o, grid.patch_shape)});
  const auto s = stitch(patches, grid, shape);
  double err = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(s.data[i] - v.data[i]));
  report("stitch_round_trip", err <= 1e-10,
         fmt("patches=%zu max_error=%.3g (need <=1e-10)", grid.origins.size(), err));
}

void metrics_exactness() {
  std::mt19937_64 rng(7);
  bool counts_ok = true;
  double worst = 0.0;
  for (int pair = 0; pair < 10; ++pair) {
    const double p_pred = 0.05 + 0.09 * pair, p_truth = 0.5 - 0.045 * pair;
    std::bernoulli_distribution bp(p_pred), bt(p_truth);
    LabelVolume pred({32, 32, 32}, 0), truth({32, 32, 32}, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred.data[i] = bp(rng);
      truth.data[i] = bt(rng);
    }
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred.data[i] && truth.data[i]) ++tp;
      else if (pred.data[i]) ++fp;
      else if (truth.data[i]) ++fn;
      else ++tn;
    }
    const auto r = confusion(pred, truth);
    counts_ok = counts_ok && r.tp == tp && r.fp == fp && r.fn == fn && r.tn == tn;
    const double dice = 2.0 * tp / (2.0 * tp + fp + fn);
    const double fpr = static_cast<double>(fp) / (fp + tn);
    const double fnr = static_cast<double>(fn) / (fn + tp);
    worst = std::max({worst, std::abs(r.dice - dice), std::abs(r.fpr - fpr), std::abs(r.fnr - fnr)});
  }
  report("metrics_exactness", counts_ok && worst <= 1e-12,
         fmt("pairs=10 counts_exact=%s max_ratio_error=%.3g (need <=1e-12)", counts_ok ? "yes" : "no", worst));
}

void determinism(const fs::path& root) {
  const std::string base = "generate --preset complex --seed 31 -n 4 -q";
  const auto a = root / "det_a", b = root / "det_b", c = root / "det_c";
  const int rc = testing::run_cli(base + " --jobs 1 --out " + a.string()) +
                 testing::run_cli(base + " --jobs 1 --out " + b.string()) +
                 testing::run_cli(base + " --jobs 8 --out " + c.string());
  const auto da = dataset_bytes(a);
  const bool runs = rc == 0 && da.size() == 9 && da == dataset_bytes(b);
  const bool jobs = rc == 0 && da == dataset_bytes(c);
  report("determinism", runs && jobs,
         fmt("files=%zu reruns_identical=%s jobs1_vs_jobs8_identical=%s", da.size(), runs ? "yes" : "no",
             jobs ? "yes" : "no"));
}

void preset_containment() {
  const auto simple = preset("simple"), complex = preset("complex");
  std::map<std::string, Distribution> wide;
  for_each_distribution(complex, [&](const std::string& path, const Distribution& d) { wide[path] = d; });
  std::size_t checked = 0;
  std::vector<std::string> bad;
  for_each_distribution(simple, [&](const std::string& path, const Distribution& d) {
    ++checked;
    const auto it = wide.find(path);
    if (it == wide.end() || !d.contained_in(it->second)) bad.push_back(path);
  });
  std::string detail = fmt("intervals=%zu violations=%zu", checked, bad.size());
  for (const auto& p : bad) detail += " " + p;
  report("preset_containment", bad.empty() && checked == wide.size(), detail);
}

void throughput(const fs::path& root) {
  auto t0 = Clock::now();
  const int rc1 = testing::run_cli("generate --preset complex --seed 5 -n 1 -q --out " + (root / "tp_one").string());
  const double one = seconds_since(t0);
  t0 = Clock::now();
  const int rc100 =
      testing::run_cli("generate --preset complex --seed 6 -n 100 --jobs 8 -q --out " + (root / "tp_hundred").string());
  const double hundred = seconds_since(t0);
  const bool ok = rc1 == 0 && rc100 == 0 && one < 30.0 && hundred < 600.0;
  report("throughput", ok,
         fmt("one_pair=%.1fs hundred_pairs_jobs8=%.1fs hardware_threads=%u (need <30s, <600s)", one, hundred,
             std::thread::hardware_concurrency()));
}

}  // namespace

int main() {
  const fs::path root = VSYNTH_TEST_TMP;
  fs::remove_all(root);
  fs::create_directories(root);

  rasterizer_oracle();
  projection_optimality();
  dark_vessels();
  stitch_round_trip();
  metrics_exactness();
  determinism(root);
  preset_containment();
  throughput(root);

  fs::remove_all(root);
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
