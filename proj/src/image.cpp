#include "fdan/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace fdan {

const char* to_string(ColorSpace c) {
  return c == ColorSpace::sdr_709 ? "sdr_709" : "hdr_2100";
}

ColorSpace color_space_from(const std::string& name) {
  if (name == "sdr_709") return ColorSpace::sdr_709;
  if (name == "hdr_2100") return ColorSpace::hdr_2100;
  throw FormatError("unknown color space '" + name + "'");
}

void ImageBuffer::validate() const {
  if (width <= 0 || height <= 0)
    throw ShapeError("image: dims " + std::to_string(width) + "x" +
                     std::to_string(height) + " must be positive");
  if (bit_depth != 8 && bit_depth != 10)
    throw FormatError("image: bit depth must be 8 or 10, got " +
                      std::to_string(bit_depth));
  const auto expect = static_cast<std::size_t>(pixels());
  const int peak = max_code();
  for (int p = 0; p < 3; ++p) {
    if (planes[static_cast<std::size_t>(p)].size() != expect)
      throw ShapeError("image: plane " + std::to_string(p) + " has " +
                       std::to_string(planes[static_cast<std::size_t>(p)].size()) +
                       " samples, expected " + std::to_string(expect));
    for (const std::uint16_t v : planes[static_cast<std::size_t>(p)])
      if (v > peak)
        throw FormatError("image: code " + std::to_string(v) + " in plane " +
                          std::to_string(p) + " exceeds " +
                          std::to_string(bit_depth) + "-bit range");
  }
}

// --- PNG --------------------------------------------------------------------

namespace {

[[noreturn]] void png_error_to_exception(png_structp, png_const_charp msg) {
  throw FormatError(std::string("png: ") + (msg ? msg : "unknown error"));
}

void png_swallow_warning(png_structp, png_const_charp) {}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

ImageBuffer load_png(const std::filesystem::path& path) {
  PngReader r;
  r.fp = std::fopen(path.string().c_str(), "rb");
  if (!r.fp) throw IoError("cannot open '" + path.string() + "'");
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                 png_error_to_exception, png_swallow_warning);
  if (!r.png) throw InternalError("png: allocation failed");
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw InternalError("png: allocation failed");

  png_init_io(r.png, r.fp);
  png_read_info(r.png, r.info);

  const png_uint_32 w = png_get_image_width(r.png, r.info);
  const png_uint_32 h = png_get_image_height(r.png, r.info);
  const int depth = png_get_bit_depth(r.png, r.info);
  const int color = png_get_color_type(r.png, r.info);
  if (color != PNG_COLOR_TYPE_RGB)
    throw FormatError(path.string() + ": only RGB PNGs are supported");
  if (depth != 8 && depth != 16)
    throw FormatError(path.string() + ": unsupported PNG bit depth " +
                      std::to_string(depth));
  png_set_interlace_handling(r.png);
  png_read_update_info(r.png, r.info);

  const std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
  std::vector<std::uint8_t> raw(rowbytes * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + y * rowbytes;
  png_read_image(r.png, rows.data());
  png_read_end(r.png, nullptr);

  ImageBuffer img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.format = PixelFormat::rgb;
  if (depth == 8) {
    img.bit_depth = 8;
    img.color_space = ColorSpace::sdr_709;
  } else {
    // 16-bit container carrying 10-bit codes
    img.bit_depth = 10;
    img.color_space = ColorSpace::hdr_2100;
  }
  for (auto& p : img.planes) p.resize(static_cast<std::size_t>(img.pixels()));

  for (png_uint_32 y = 0; y < h; ++y) {
    const std::uint8_t* row = rows[y];
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        std::uint16_t v;
        if (depth == 8) {
          v = row[3 * x + static_cast<png_uint_32>(c)];
        } else {
          const std::size_t off = (3 * x + static_cast<png_uint_32>(c)) * 2;
          v = static_cast<std::uint16_t>((row[off] << 8) | row[off + 1]);
        }
        img.planes[static_cast<std::size_t>(c)][y * w + x] = v;
      }
    }
  }
  img.validate();  // rejects 16-bit samples above the 10-bit ceiling
  return img;
}

void write_png(const std::filesystem::path& path, int w, int h, int depth,
               const std::uint8_t* rows_base, std::size_t rowbytes) {
  PngWriter wr;
  wr.fp = std::fopen(path.string().c_str(), "wb");
  if (!wr.fp) throw IoError("cannot open '" + path.string() + "' for writing");
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                   png_error_to_exception, png_swallow_warning);
  if (!wr.png) throw InternalError("png: allocation failed");
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw InternalError("png: allocation failed");

  png_init_io(wr.png, wr.fp);
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w),
               static_cast<png_uint_32>(h), depth, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(rows_base + static_cast<std::size_t>(y) * rowbytes);
  png_write_image(wr.png, rows.data());
  png_write_end(wr.png, nullptr);
  if (std::fflush(wr.fp) != 0)
    throw IoError("write failed for '" + path.string() + "'");
}

void save_png(const ImageBuffer& img, const std::filesystem::path& path) {
  img.validate();
  if (img.format != PixelFormat::rgb)
    throw FormatError("png container stores RGB; convert the buffer first");
  const bool wants16 = img.bit_depth == 10;
  if (!wants16 && img.color_space != ColorSpace::sdr_709)
    throw FormatError("8-bit png container implies sdr_709 content");
  if (wants16 && img.color_space != ColorSpace::hdr_2100)
    throw FormatError("16-bit png container implies hdr_2100 content");

  const int w = img.width, h = img.height;
  if (!wants16) {
    std::vector<std::uint8_t> inter(static_cast<std::size_t>(img.pixels()) * 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          inter[(static_cast<std::size_t>(y) * w + x) * 3 +
                static_cast<std::size_t>(c)] =
              static_cast<std::uint8_t>(
                  img.planes[static_cast<std::size_t>(c)]
                            [static_cast<std::size_t>(y) * w + x]);
    detail::write_png_rgb8(path, w, h, inter);
  } else {
    std::vector<std::uint16_t> inter(static_cast<std::size_t>(img.pixels()) * 3);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          inter[(static_cast<std::size_t>(y) * w + x) * 3 +
                static_cast<std::size_t>(c)] =
              img.planes[static_cast<std::size_t>(c)]
                        [static_cast<std::size_t>(y) * w + x];
    detail::write_png_rgb16(path, w, h, inter);
  }
}

}  // namespace

namespace detail {

void write_png_rgb8(const std::filesystem::path& path, int w, int h,
                    const std::vector<std::uint8_t>& interleaved) {
  if (interleaved.size() != static_cast<std::size_t>(w) * h * 3)
    throw ShapeError("write_png_rgb8: buffer size mismatch");
  write_png(path, w, h, 8, interleaved.data(),
            static_cast<std::size_t>(w) * 3);
}

void write_png_rgb16(const std::filesystem::path& path, int w, int h,
                     const std::vector<std::uint16_t>& interleaved) {
  if (interleaved.size() != static_cast<std::size_t>(w) * h * 3)
    throw ShapeError("write_png_rgb16: buffer size mismatch");
  // PNG 16-bit samples are big-endian.
  std::vector<std::uint8_t> raw(interleaved.size() * 2);
  for (std::size_t i = 0; i < interleaved.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(interleaved[i] >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(interleaved[i] & 0xff);
  }
  write_png(path, w, h, 16, raw.data(), static_cast<std::size_t>(w) * 6);
}

}  // namespace detail

// --- raw YUV + sidecar --------------------------------------------------------

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

ImageBuffer load_yuv(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  std::ifstream sf(side);
  if (!sf) throw IoError("cannot open sidecar '" + side.string() + "'");
  nlohmann::json j;
  try {
    sf >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(side.string() + ": expected an object");
  for (const auto& item : j.items())
    if (item.key() != "width" && item.key() != "height" &&
        item.key() != "bit_depth" && item.key() != "color_space")
      throw FormatError(side.string() + ": unknown key '" + item.key() + "'");

  ImageBuffer img;
  try {
    img.width = j.at("width").get<int>();
    img.height = j.at("height").get<int>();
    img.bit_depth = j.at("bit_depth").get<int>();
    img.color_space = color_space_from(j.at("color_space").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(side.string() + ": " + e.what());
  }
  img.format = PixelFormat::yuv;
  if (img.width <= 0 || img.height <= 0)
    throw FormatError(side.string() + ": non-positive dimensions");
  if (img.bit_depth != 8 && img.bit_depth != 10)
    throw FormatError(side.string() + ": bit_depth must be 8 or 10");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const std::int64_t actual = in.tellg();
  in.seekg(0);
  const int sample_bytes = img.bit_depth > 8 ? 2 : 1;
  const std::int64_t expect = img.pixels() * 3 * sample_bytes;
  if (actual != expect)
    throw FormatError(path.string() + ": payload is " + std::to_string(actual) +
                      " bytes, sidecar implies " + std::to_string(expect));

  std::vector<std::uint8_t> raw(static_cast<std::size_t>(expect));
  in.read(reinterpret_cast<char*>(raw.data()), expect);
  if (in.gcount() != expect) throw IoError(path.string() + ": short read");

  const std::size_t n = static_cast<std::size_t>(img.pixels());
  for (int p = 0; p < 3; ++p) {
    auto& plane = img.planes[static_cast<std::size_t>(p)];
    plane.resize(n);
    if (sample_bytes == 1) {
      const std::uint8_t* src = raw.data() + static_cast<std::size_t>(p) * n;
      for (std::size_t i = 0; i < n; ++i) plane[i] = src[i];
    } else {
      const std::uint8_t* src = raw.data() + static_cast<std::size_t>(p) * n * 2;
      for (std::size_t i = 0; i < n; ++i)
        plane[i] = static_cast<std::uint16_t>(src[2 * i] | (src[2 * i + 1] << 8));
    }
  }
  img.validate();
  return img;
}

void save_yuv(const ImageBuffer& img, const std::filesystem::path& path) {
  img.validate();
  if (img.format != PixelFormat::yuv)
    throw FormatError("yuv container stores YUV; convert the buffer first");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  const std::size_t n = static_cast<std::size_t>(img.pixels());
  if (img.bit_depth == 8) {
    std::vector<std::uint8_t> raw(n);
    for (int p = 0; p < 3; ++p) {
      const auto& plane = img.planes[static_cast<std::size_t>(p)];
      for (std::size_t i = 0; i < n; ++i)
        raw[i] = static_cast<std::uint8_t>(plane[i]);
      out.write(reinterpret_cast<const char*>(raw.data()),
                static_cast<std::streamsize>(n));
    }
  } else {
    std::vector<std::uint8_t> raw(n * 2);
    for (int p = 0; p < 3; ++p) {
      const auto& plane = img.planes[static_cast<std::size_t>(p)];
      for (std::size_t i = 0; i < n; ++i) {
        raw[2 * i] = static_cast<std::uint8_t>(plane[i] & 0xff);
        raw[2 * i + 1] = static_cast<std::uint8_t>(plane[i] >> 8);
      }
      out.write(reinterpret_cast<const char*>(raw.data()),
                static_cast<std::streamsize>(n * 2));
    }
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");

  nlohmann::json j{{"width", img.width},
                   {"height", img.height},
                   {"bit_depth", img.bit_depth},
                   {"color_space", to_string(img.color_space)}};
  std::ofstream sf(sidecar_path(path), std::ios::trunc);
  if (!sf) throw IoError("cannot open sidecar for writing");
  sf << j.dump(2) << '\n';
  if (!sf) throw IoError("sidecar write failed");
}

std::string lower_ext(const std::filesystem::path& path) {
  std::string e = path.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(c));
  return e;
}

}  // namespace

ImageBuffer load_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".yuv") return load_yuv(path);
  throw FormatError("unsupported image container '" + ext + "' for '" +
                    path.string() + "'");
}

void save_image(const ImageBuffer& img, const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".yuv") return save_yuv(img, path);
  throw FormatError("unsupported image container '" + ext + "' for '" +
                    path.string() + "'");
}

// --- conversions --------------------------------------------------------------

Tensor to_tensor(const ImageBuffer& img) {
  img.validate();
  Tensor t(Shape{1, 3, img.height, img.width});
  const float inv = 1.f / static_cast<float>(img.max_code());
  for (int c = 0; c < 3; ++c) {
    const auto& plane = img.planes[static_cast<std::size_t>(c)];
    float* dst = t.data() + static_cast<std::int64_t>(c) * img.pixels();
    for (std::int64_t i = 0; i < img.pixels(); ++i)
      dst[i] = static_cast<float>(plane[static_cast<std::size_t>(i)]) * inv;
  }
  return t;
}

ImageBuffer from_tensor(const Tensor& t, int bit_depth, ColorSpace cs,
                        PixelFormat fmt) {
  const Shape s = t.shape();
  if (s.n != 1 || s.c != 3)
    throw ShapeError("from_tensor: expected (1,3,H,W), got " + to_string(s));
  if (bit_depth != 8 && bit_depth != 10)
    throw FormatError("from_tensor: bit depth must be 8 or 10");
  ImageBuffer img;
  img.width = s.w;
  img.height = s.h;
  img.bit_depth = bit_depth;
  img.color_space = cs;
  img.format = fmt;
  const float peak = static_cast<float>(img.max_code());
  for (int c = 0; c < 3; ++c) {
    auto& plane = img.planes[static_cast<std::size_t>(c)];
    plane.resize(static_cast<std::size_t>(img.pixels()));
    const float* src = t.data() + static_cast<std::int64_t>(c) * img.pixels();
    for (std::int64_t i = 0; i < img.pixels(); ++i) {
      float v = src[i];
      v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
      plane[static_cast<std::size_t>(i)] =
          static_cast<std::uint16_t>(std::lround(v * peak));
    }
  }
  return img;
}

LumaPlane to_luma(const ImageBuffer& img) {
  img.validate();
  LumaPlane y;
  y.width = img.width;
  y.height = img.height;
  y.peak = static_cast<float>(img.max_code());
  y.values.resize(static_cast<std::size_t>(img.pixels()));
  if (img.format == PixelFormat::yuv) {
    const auto& plane = img.planes[0];
    for (std::size_t i = 0; i < plane.size(); ++i)
      y.values[i] = static_cast<float>(plane[i]);
    return y;
  }
  // BT.709 vs BT.2020 luma weights
  const double kr = img.color_space == ColorSpace::sdr_709 ? 0.2126 : 0.2627;
  const double kb = img.color_space == ColorSpace::sdr_709 ? 0.0722 : 0.0593;
  const double kg = 1.0 - kr - kb;
  for (std::size_t i = 0; i < y.values.size(); ++i)
    y.values[i] = static_cast<float>(kr * img.planes[0][i] +
                                     kg * img.planes[1][i] +
                                     kb * img.planes[2][i]);
  return y;
}

}  // namespace fdan
