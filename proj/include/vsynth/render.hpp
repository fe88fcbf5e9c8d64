#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <vector>

#include <png.h>

#include "vsynth/errors.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB

  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto* p = &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

inline void write_png(const std::filesystem::path& path, const RgbImage& img) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw DataError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
    throw DataError("png encoding failed: " + path.string());
  }
  png_init_io(png, f);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&img.pixels[static_cast<std::size_t>(y) * img.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

/// Central axial, coronal and sagittal slices side by side. With a label, a second row
/// repeats the slices with vessel voxels tinted red.
inline RgbImage contact_sheet(const Volume<float>& image, const LabelVolume* label = nullptr) {
  if (label) require_same_shape(image, *label, "render");
  const auto& s = image.shape;
  const int gap = 4;
  // (u extent, v extent) of each view: z-slice (x,y), y-slice (x,z), x-slice (y,z)
  const int w0 = s[0], h0 = s[1], w1 = s[0], h1 = s[2], w2 = s[1], h2 = s[2];
  const int width = w0 + w1 + w2 + 2 * gap;
  const int row_h = std::max({h0, h1, h2});
  const int rows = label ? 2 : 1;
  RgbImage out(width, rows * row_h + (rows - 1) * gap);

  float lo = 0.0f, hi = 1.0f;
  if (!image.data.empty()) {
    const auto [mn, mx] = std::minmax_element(image.data.begin(), image.data.end());
    lo = *mn;
    hi = *mx > *mn ? *mx : *mn + 1.0f;
  }
  auto gray = [&](float v) { return static_cast<std::uint8_t>(std::clamp((v - lo) / (hi - lo), 0.0f, 1.0f) * 255.0f + 0.5f); };

  auto draw = [&](int view, int x0, int y0, bool overlay) {
    const int cx = s[0] / 2, cy = s[1] / 2, cz = s[2] / 2;
    const int w = view == 0 ? w0 : (view == 1 ? w1 : w2);
    const int h = view == 0 ? h0 : (view == 1 ? h1 : h2);
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        int x, y, z;
        if (view == 0) { x = u; y = v; z = cz; }
        else if (view == 1) { x = u; y = cy; z = v; }
        else { x = cx; y = u; z = v; }
        const std::uint8_t g = gray(image.at(x, y, z));
        if (overlay && label->at(x, y, z)) out.set(x0 + u, y0 + v, 255, g / 2, g / 2);
        else out.set(x0 + u, y0 + v, g, g, g);
      }
    }
  };
  for (int r = 0; r < rows; ++r) {
    const int y0 = r * (row_h + gap);
    draw(0, 0, y0, r == 1);
    draw(1, w0 + gap, y0, r == 1);
    draw(2, w0 + w1 + 2 * gap, y0, r == 1);
  }
  return out;
}

}  // namespace vsynth
