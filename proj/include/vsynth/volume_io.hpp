#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "vsynth/errors.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

static_assert(std::endian::native == std::endian::little, "volume I/O assumes a little-endian host");

enum class DType { uint8, float32 };

inline const char* to_string(DType d) { return d == DType::uint8 ? "uint8" : "float32"; }

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, std::uint8_t>) return DType::uint8;
  else {
    static_assert(std::is_same_v<T, float>, "volumes are stored as uint8 or float32");
    return DType::float32;
  }
}

struct VolumeHeader {
  Shape shape{};
  double voxel_size = 1.0;
  DType dtype = DType::uint8;
};

enum class VolumeFormat { nifti_gz, nifti, raw };

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline VolumeFormat format_for(const std::filesystem::path& p) {
  const std::string s = p.string();
  if (ends_with(s, ".nii.gz")) return VolumeFormat::nifti_gz;
  if (ends_with(s, ".nii")) return VolumeFormat::nifti;
  if (ends_with(s, ".raw")) return VolumeFormat::raw;
  throw ConfigError("unrecognized volume extension (expected .nii.gz, .nii or .raw): " + s);
}

/// Sidecar metadata path for a raw volume: foo.raw -> foo.json.
inline std::filesystem::path sidecar_path(std::filesystem::path raw) { return raw.replace_extension(".json"); }

namespace nifti {

inline constexpr int kHeaderSize = 348;

/// pixdim is float32; read it back as the shortest decimal that rounds to it, so a
/// voxel size of 0.8 comes back as 0.8 rather than 0.800000011920929.
inline double widen(float f) {
  char buf[32];
  const auto end = std::to_chars(buf, buf + sizeof buf, f).ptr;
  double d = f;
  std::from_chars(buf, end, d);
  return d;
}
inline constexpr int kDataOffset = 352;
inline constexpr short kUint8 = 2;
inline constexpr short kFloat32 = 16;

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T value) {
  std::memcpy(buf.data() + offset, &value, sizeof(T));
}

template <typename T>
T get(const char* buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf + offset, sizeof(T));
  return v;
}

/// 348-byte NIfTI-1 header plus the 4-byte empty extension block.
inline std::vector<char> encode_header(const VolumeHeader& h) {
  std::vector<char> b(kDataOffset, 0);
  const float vs = static_cast<float>(h.voxel_size);
  put<int>(b, 0, kHeaderSize);
  b[38] = 'r';  // regular
  const short dims[8] = {3, static_cast<short>(h.shape[0]), static_cast<short>(h.shape[1]),
                         static_cast<short>(h.shape[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) put<short>(b, 40 + 2 * i, dims[i]);
  const bool u8 = h.dtype == DType::uint8;
  put<short>(b, 70, u8 ? kUint8 : kFloat32);
  put<short>(b, 72, u8 ? 8 : 32);
  const float pixdim[8] = {1.0f, vs, vs, vs, 1.0f, 1.0f, 1.0f, 1.0f};
  for (int i = 0; i < 8; ++i) put<float>(b, 76 + 4 * i, pixdim[i]);
  put<float>(b, 108, static_cast<float>(kDataOffset));
  put<float>(b, 112, 1.0f);  // scl_slope
  put<float>(b, 116, 0.0f);  // scl_inter
  b[123] = 2;                // xyzt_units: mm
  put<float>(b, 124, 1.0f);  // cal_max; cal_min stays 0
  std::strncpy(b.data() + 148, "vsynth", 80);
  put<short>(b, 252, 0);  // qform_code
  put<short>(b, 254, 1);  // sform_code: scanner
  const float srow[12] = {vs, 0, 0, 0, 0, vs, 0, 0, 0, 0, vs, 0};
  for (int i = 0; i < 12; ++i) put<float>(b, 280 + 4 * i, srow[i]);
  std::memcpy(b.data() + 344, "n+1\0", 4);
  return b;
}

inline VolumeHeader decode_header(const char* b, std::size_t len, const std::string& where) {
  if (len < static_cast<std::size_t>(kHeaderSize)) throw DataError(where + ": truncated NIfTI header");
  const int sizeof_hdr = get<int>(b, 0);
  if (sizeof_hdr != kHeaderSize) {
    if (__builtin_bswap32(static_cast<std::uint32_t>(sizeof_hdr)) == kHeaderSize) {
      throw DataError(where + ": big-endian NIfTI is not supported");
    }
    throw DataError(where + ": not a NIfTI-1 file (sizeof_hdr=" + std::to_string(sizeof_hdr) + ")");
  }
  if (std::memcmp(b + 344, "n+1\0", 4) != 0) throw DataError(where + ": expected single-file NIfTI-1 magic 'n+1'");
  const short ndim = get<short>(b, 40);
  if (ndim < 3 || ndim > 7) throw DataError(where + ": dim[0] must be 3");
  for (int i = 4; i <= ndim; ++i) {
    if (get<short>(b, 40 + 2 * i) != 1) throw DataError(where + ": only 3D volumes are supported");
  }
  VolumeHeader h;
  for (int a = 0; a < 3; ++a) {
    h.shape[a] = get<short>(b, 42 + 2 * a);
    if (h.shape[a] <= 0) throw DataError(where + ": non-positive dimension");
  }
  const short datatype = get<short>(b, 70);
  if (datatype == kUint8) h.dtype = DType::uint8;
  else if (datatype == kFloat32) h.dtype = DType::float32;
  else throw DataError(where + ": unsupported NIfTI datatype " + std::to_string(datatype));
  const float px = get<float>(b, 80), py = get<float>(b, 84), pz = get<float>(b, 88);
  if (px != py || py != pz) throw DataError(where + ": anisotropic voxels are not supported");
  h.voxel_size = px > 0 ? widen(px) : 1.0;
  const float vox_offset = get<float>(b, 108);
  if (vox_offset != static_cast<float>(kDataOffset)) {
    throw DataError(where + ": unsupported vox_offset " + std::to_string(vox_offset));
  }
  const float slope = get<float>(b, 112), inter = get<float>(b, 116);
  if (!(slope == 0.0f || (slope == 1.0f && inter == 0.0f))) {
    throw DataError(where + ": intensity scaling (scl_slope/scl_inter) is not supported");
  }
  return h;
}

}  // namespace nifti

namespace detail {

inline std::vector<char> read_all(const std::filesystem::path& path, bool gz) {
  std::vector<char> bytes;
  if (gz) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) throw DataError("cannot open " + path.string());
    char buf[1 << 16];
    int n;
    while ((n = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + n);
    int err = 0;
    const char* msg = gzerror(f, &err);
    const bool failed = n < 0 || (err != Z_OK && err != Z_STREAM_END);
    const std::string what = msg ? msg : "";
    gzclose(f);
    if (failed) throw DataError(path.string() + ": corrupt gzip stream (" + what + ")");
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  return bytes;
}

inline void write_all(const std::filesystem::path& path, const std::vector<char>& header,
                      const void* data, std::size_t bytes, bool gz) {
  if (gz) {
    // zlib writes a fixed gzip header (mtime 0), so output is reproducible byte-for-byte.
    gzFile f = gzopen(path.c_str(), "wb1");
    if (!f) throw DataError("cannot write " + path.string());
    bool ok = gzwrite(f, header.data(), static_cast<unsigned>(header.size())) == static_cast<int>(header.size());
    const char* p = static_cast<const char*>(data);
    std::size_t left = bytes;
    while (ok && left > 0) {
      const unsigned chunk = static_cast<unsigned>(std::min<std::size_t>(left, 1u << 30));
      ok = gzwrite(f, p, chunk) == static_cast<int>(chunk);
      p += chunk;
      left -= chunk;
    }
    if (gzclose(f) != Z_OK || !ok) throw DataError("write failed: " + path.string());
  } else {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw DataError("write failed: " + path.string());
  }
}

inline VolumeHeader read_sidecar(const std::filesystem::path& raw) {
  const auto side = sidecar_path(raw);
  std::ifstream in(side);
  if (!in) throw DataError("missing sidecar " + side.string());
  try {
    const auto j = nlohmann::json::parse(in);
    VolumeHeader h;
    h.shape = j.at("shape").get<Shape>();
    h.voxel_size = j.at("voxel_size").get<double>();
    const auto dt = j.at("dtype").get<std::string>();
    if (dt == "uint8") h.dtype = DType::uint8;
    else if (dt == "float32") h.dtype = DType::float32;
    else throw DataError(side.string() + ": unsupported dtype " + dt);
    if (j.value("byte_order", "little") != "little") throw DataError(side.string() + ": byte_order must be little");
    for (int e : h.shape) {
      if (e <= 0) throw DataError(side.string() + ": non-positive dimension");
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(side.string() + ": malformed sidecar (" + e.what() + ")");
  }
}

inline std::size_t dtype_size(DType d) { return d == DType::uint8 ? 1 : 4; }

}  // namespace detail

/// Shape, voxel size and dtype without decoding the voxel data (NIfTI still decompresses).
inline VolumeHeader read_header(const std::filesystem::path& path) {
  const auto fmt = format_for(path);
  if (fmt == VolumeFormat::raw) return detail::read_sidecar(path);
  const auto bytes = detail::read_all(path, fmt == VolumeFormat::nifti_gz);
  return nifti::decode_header(bytes.data(), bytes.size(), path.string());
}

template <typename T>
void write_volume(const std::filesystem::path& path, const Volume<T>& vol) {
  const VolumeHeader h{vol.shape, vol.voxel_size, dtype_of<T>()};
  const auto fmt = format_for(path);
  const std::size_t bytes = vol.size() * sizeof(T);
  if (fmt == VolumeFormat::raw) {
    nlohmann::json side{{"format", "vsynth-raw"},
                        {"schema_version", 1},
                        {"shape", vol.shape},
                        {"voxel_size", vol.voxel_size},
                        {"dtype", to_string(h.dtype)},
                        {"byte_order", "little"},
                        {"layout", "x-fastest"}};
    std::ofstream s(sidecar_path(path));
    if (!s) throw DataError("cannot write " + sidecar_path(path).string());
    s << side.dump(2) << '\n';
    detail::write_all(path, {}, vol.data.data(), bytes, false);
    return;
  }
  for (int e : vol.shape) {
    if (e > 32767) throw DataError("NIfTI-1 extents are limited to 32767");
  }
  detail::write_all(path, nifti::encode_header(h), vol.data.data(), bytes, fmt == VolumeFormat::nifti_gz);
}

/// Reads a volume stored with dtype T; any other stored dtype is an error.
template <typename T>
Volume<T> read_volume(const std::filesystem::path& path) {
  const auto fmt = format_for(path);
  VolumeHeader h;
  std::vector<char> bytes;
  std::size_t offset = 0;
  if (fmt == VolumeFormat::raw) {
    h = detail::read_sidecar(path);
    bytes = detail::read_all(path, false);
  } else {
    bytes = detail::read_all(path, fmt == VolumeFormat::nifti_gz);
    h = nifti::decode_header(bytes.data(), bytes.size(), path.string());
    offset = nifti::kDataOffset;
  }
  if (h.dtype != dtype_of<T>()) {
    throw DataError(path.string() + ": dtype mismatch (stored " + std::string(to_string(h.dtype)) +
                    ", expected " + to_string(dtype_of<T>()) + ")");
  }
  const std::size_t need = voxel_count(h.shape) * sizeof(T);
  if (bytes.size() < offset + need) throw DataError(path.string() + ": truncated voxel data");
  if (fmt == VolumeFormat::raw && bytes.size() != need) throw DataError(path.string() + ": size does not match sidecar");
  Volume<T> v(h.shape, T{}, h.voxel_size);
  std::memcpy(v.data.data(), bytes.data() + offset, need);
  return v;
}

inline LabelVolume read_label(const std::filesystem::path& p) {
  auto v = read_volume<std::uint8_t>(p);
  for (auto x : v.data) {
    if (x > 1) throw DataError(p.string() + ": label volume is not binary");
  }
  return v;
}

inline IntensityVolume read_image(const std::filesystem::path& p) { return read_volume<float>(p); }

}  // namespace vsynth
