#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fdan/errors.hpp"
#include "fdan/tensor.hpp"

namespace fdan {

enum class ColorSpace { sdr_709, hdr_2100 };
enum class PixelFormat { rgb, yuv };

const char* to_string(ColorSpace c);
ColorSpace color_space_from(const std::string& name);

// Planar image of coded values. SDR content is 8-bit, HDR content 10-bit;
// planes always hold the raw integer codes regardless of container.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 10
  ColorSpace color_space = ColorSpace::sdr_709;
  PixelFormat format = PixelFormat::rgb;
  std::array<std::vector<std::uint16_t>, 3> planes;  // row-major, w*h each

  int max_code() const { return (1 << bit_depth) - 1; }
  std::int64_t pixels() const {
    return static_cast<std::int64_t>(width) * height;
  }
  // Dims positive, bit depth legal, plane sizes consistent, codes in range.
  void validate() const;
};

// Containers (dispatch on extension):
//   .png  8-bit RGB (standard range) or 16-bit RGB carrying 10-bit codes
//         (high range)
//   .yuv  raw planar 4:4:4, u8 or little-endian u16 samples, described by a
//         JSON sidecar at <file>.yuv.json
ImageBuffer load_image(const std::filesystem::path& path);
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

// (1, 3, H, W), values normalized to [0, 1] by the image's max code.
Tensor to_tensor(const ImageBuffer& img);
// Clamps to [0, 1] and quantizes to codes (round half away from zero).
ImageBuffer from_tensor(const Tensor& t, int bit_depth, ColorSpace cs,
                        PixelFormat fmt);

// Luminance on the coded-value scale, plus the scale's peak code.
struct LumaPlane {
  int width = 0;
  int height = 0;
  float peak = 255.f;
  std::vector<float> values;
};

// YUV inputs pass plane 0 through untouched; RGB inputs apply the luma
// weights of their color space (BT.709 or BT.2020 primaries).
LumaPlane to_luma(const ImageBuffer& img);

namespace detail {
// Raw PNG writers; exposed so tests can craft out-of-range files.
void write_png_rgb8(const std::filesystem::path& path, int w, int h,
                    const std::vector<std::uint8_t>& interleaved);
void write_png_rgb16(const std::filesystem::path& path, int w, int h,
                     const std::vector<std::uint16_t>& interleaved);
}  // namespace detail

}  // namespace fdan
