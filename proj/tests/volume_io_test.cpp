#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "test_support.hpp"
#include "vsynth/volume_io.hpp"

using namespace vsynth;
namespace fs = std::filesystem;

namespace {

IntensityVolume random_image(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  IntensityVolume v(s, 0.0f, 0.8);
  for (auto& x : v.data) x = u(rng);
  return v;
}

LabelVolume random_label(const Shape& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(0.2);
  LabelVolume v(s, 0, 1.25);
  for (auto& x : v.data) x = b(rng);
  return v;
}

}  // namespace

TEST(VolumeIO, RoundTripAllFormats) {
  const auto dir = vsynth::testing::fresh_dir("roundtrip");
  const auto img = random_image({13, 7, 5}, 1);
  const auto lab = random_label({13, 7, 5}, 2);
  for (const char* ext : {".nii.gz", ".nii", ".raw"}) {
    write_volume(dir / (std::string("img") + ext), img);
    write_volume(dir / (std::string("lab") + ext), lab);
    EXPECT_TRUE(read_image(dir / (std::string("img") + ext)) == img) << ext;
    EXPECT_TRUE(read_label(dir / (std::string("lab") + ext)) == lab) << ext;
  }
}

TEST(VolumeIO, HeaderFields) {
  const auto dir = vsynth::testing::fresh_dir("header");
  write_volume(dir / "a.nii", random_label({4, 5, 6}, 3));
  std::ifstream in(dir / "a.nii", std::ios::binary);
  std::vector<char> b(352);
  in.read(b.data(), 352);
  EXPECT_EQ(nifti::get<int>(b.data(), 0), 348);
  EXPECT_EQ(nifti::get<short>(b.data(), 40), 3);
  EXPECT_EQ(nifti::get<short>(b.data(), 42), 4);
  EXPECT_EQ(nifti::get<short>(b.data(), 44), 5);
  EXPECT_EQ(nifti::get<short>(b.data(), 46), 6);
  EXPECT_EQ(nifti::get<short>(b.data(), 70), 2);
  EXPECT_EQ(nifti::get<float>(b.data(), 80), 1.25f);
  EXPECT_EQ(nifti::get<float>(b.data(), 108), 352.0f);
  EXPECT_EQ(std::string(b.data() + 344), "n+1");
  EXPECT_EQ(fs::file_size(dir / "a.nii"), 352u + 4 * 5 * 6);
}

TEST(VolumeIO, GzipOutputIsReproducible) {
  const auto dir = vsynth::testing::fresh_dir("repro");
  const auto img = random_image({16, 16, 16}, 4);
  write_volume(dir / "a.nii.gz", img);
  write_volume(dir / "b.nii.gz", img);
  std::ifstream a(dir / "a.nii.gz", std::ios::binary), b(dir / "b.nii.gz", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
  EXPECT_EQ(sa, sb);
}

TEST(VolumeIO, RejectsTruncatedFiles) {
  const auto dir = vsynth::testing::fresh_dir("truncated");
  write_volume(dir / "a.nii", random_image({8, 8, 8}, 5));
  fs::resize_file(dir / "a.nii", 352 + 100);
  EXPECT_THROW(read_image(dir / "a.nii"), DataError);
  fs::resize_file(dir / "a.nii", 200);
  EXPECT_THROW(read_image(dir / "a.nii"), DataError);

  write_volume(dir / "b.nii.gz", random_image({8, 8, 8}, 6));
  fs::resize_file(dir / "b.nii.gz", fs::file_size(dir / "b.nii.gz") / 2);
  EXPECT_THROW(read_image(dir / "b.nii.gz"), DataError);

  write_volume(dir / "c.raw", random_image({8, 8, 8}, 7));
  fs::resize_file(dir / "c.raw", 100);
  EXPECT_THROW(read_image(dir / "c.raw"), DataError);
}

TEST(VolumeIO, RejectsDtypeMismatch) {
  const auto dir = vsynth::testing::fresh_dir("dtype");
  write_volume(dir / "img.nii.gz", random_image({4, 4, 4}, 8));
  EXPECT_THROW(read_label(dir / "img.nii.gz"), DataError);
  write_volume(dir / "lab.raw", random_label({4, 4, 4}, 9));
  EXPECT_THROW(read_image(dir / "lab.raw"), DataError);
}

TEST(VolumeIO, RejectsMalformedHeader) {
  const auto dir = vsynth::testing::fresh_dir("malformed");
  {
    std::ofstream out(dir / "junk.nii", std::ios::binary);
    out << std::string(400, 'x');
  }
  EXPECT_THROW(read_image(dir / "junk.nii"), DataError);
  EXPECT_THROW(read_image(dir / "missing.nii.gz"), DataError);
  EXPECT_THROW(read_image(dir / "no_sidecar.raw"), DataError);
  EXPECT_THROW(format_for("volume.mha"), ConfigError);
}

TEST(VolumeIO, NonBinaryLabelRejected) {
  const auto dir = vsynth::testing::fresh_dir("nonbinary");
  LabelVolume v({3, 3, 3}, 0);
  v.data[4] = 7;
  write_volume(dir / "v.nii.gz", v);
  EXPECT_THROW(read_label(dir / "v.nii.gz"), DataError);
  EXPECT_NO_THROW(read_volume<std::uint8_t>(dir / "v.nii.gz"));
}

TEST(VolumeIO, HeaderOnlyRead) {
  const auto dir = vsynth::testing::fresh_dir("hdr");
  write_volume(dir / "v.nii.gz", random_image({6, 5, 4}, 10));
  const auto h = read_header(dir / "v.nii.gz");
  EXPECT_EQ(h.shape, (Shape{6, 5, 4}));
  EXPECT_EQ(h.dtype, DType::float32);
  EXPECT_FLOAT_EQ(static_cast<float>(h.voxel_size), 0.8f);
}
