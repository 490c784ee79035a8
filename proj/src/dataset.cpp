#include "fdan/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <json.hpp>

#include "fdan/resize.hpp"

namespace fdan {

namespace fs = std::filesystem;

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!j.is_array())
    throw FormatError(path.string() + ": manifest must be a JSON array");

  Manifest m;
  m.base_dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& e = j[i];
    if (!e.is_object())
      throw FormatError(path.string() + ": entry " + std::to_string(i) +
                        " is not an object");
    for (const auto& item : e.items())
      if (item.key() != "lr" && item.key() != "hr" && item.key() != "scale")
        throw FormatError(path.string() + ": entry " + std::to_string(i) +
                          " has unknown key '" + item.key() + "'");
    ManifestEntry entry;
    try {
      entry.lr = e.at("lr").get<std::string>();
      entry.hr = e.at("hr").get<std::string>();
      entry.scale = e.at("scale").get<int>();
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(path.string() + ": entry " + std::to_string(i) + ": " +
                        ex.what());
    }
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void save_manifest(const Manifest& m, const fs::path& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : m.entries)
    j.push_back({{"lr", e.lr}, {"hr", e.hr}, {"scale", e.scale}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SamplePair load_pair(const Manifest& m, std::size_t index) {
  if (index >= m.entries.size())
    throw ArgumentError("load_pair: index " + std::to_string(index) +
                        " out of range for " + std::to_string(m.entries.size()) +
                        " entries");
  const ManifestEntry& e = m.entries[index];
  SamplePair p;
  p.scale = e.scale;
  p.id = fs::path(e.lr).stem().string();
  p.lr = load_image(m.base_dir / e.lr);
  p.hr = load_image(m.base_dir / e.hr);
  if (p.hr.width != p.lr.width * e.scale || p.hr.height != p.lr.height * e.scale)
    throw FormatError("pair '" + p.id + "': target " +
                      std::to_string(p.hr.width) + "x" +
                      std::to_string(p.hr.height) + " is not " +
                      std::to_string(e.scale) + "x the input " +
                      std::to_string(p.lr.width) + "x" +
                      std::to_string(p.lr.height));
  return p;
}

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h) {
  img.validate();
  if (w <= 0 || h <= 0 || x0 < 0 || y0 < 0 || x0 + w > img.width ||
      y0 + h > img.height)
    throw ArgumentError("crop: window " + std::to_string(w) + "x" +
                        std::to_string(h) + "+" + std::to_string(x0) + "+" +
                        std::to_string(y0) + " outside " +
                        std::to_string(img.width) + "x" +
                        std::to_string(img.height));
  ImageBuffer out;
  out.width = w;
  out.height = h;
  out.bit_depth = img.bit_depth;
  out.color_space = img.color_space;
  out.format = img.format;
  for (int p = 0; p < 3; ++p) {
    auto& dst = out.planes[static_cast<std::size_t>(p)];
    const auto& src = img.planes[static_cast<std::size_t>(p)];
    dst.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(y0 + y) * img.width + x0,
                  w, dst.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

std::pair<ImageBuffer, ImageBuffer> crop_aligned_pair(const ImageBuffer& lr,
                                                      const ImageBuffer& hr,
                                                      int scale, int patch,
                                                      Rng& rng) {
  if (scale <= 0) throw ArgumentError("crop_aligned_pair: bad scale");
  if (patch <= 0 || patch % scale != 0)
    throw ArgumentError("crop_aligned_pair: patch " + std::to_string(patch) +
                        " must be a positive multiple of scale " +
                        std::to_string(scale));
  if (hr.width != lr.width * scale || hr.height != lr.height * scale)
    throw ShapeError("crop_aligned_pair: images do not satisfy the scale relation");
  if (hr.width < patch || hr.height < patch)
    throw ArgumentError("crop_aligned_pair: image " + std::to_string(hr.width) +
                        "x" + std::to_string(hr.height) +
                        " smaller than patch " + std::to_string(patch));
  const std::uint32_t nx =
      static_cast<std::uint32_t>((hr.width - patch) / scale) + 1;
  const std::uint32_t ny =
      static_cast<std::uint32_t>((hr.height - patch) / scale) + 1;
  const int x0 = scale * static_cast<int>(rng.next_below(nx));
  const int y0 = scale * static_cast<int>(rng.next_below(ny));
  return {crop(lr, x0 / scale, y0 / scale, patch / scale, patch / scale),
          crop(hr, x0, y0, patch, patch)};
}

ImageBuffer flip_horizontal(const ImageBuffer& img) {
  ImageBuffer out = img;
  for (int p = 0; p < 3; ++p) {
    auto& plane = out.planes[static_cast<std::size_t>(p)];
    for (int y = 0; y < img.height; ++y) {
      auto row = plane.begin() + static_cast<std::ptrdiff_t>(y) * img.width;
      std::reverse(row, row + img.width);
    }
  }
  return out;
}

ImageBuffer rotate90(const ImageBuffer& img, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  if (k == 0) return img;
  ImageBuffer out;
  out.bit_depth = img.bit_depth;
  out.color_space = img.color_space;
  out.format = img.format;
  const bool swap = (k % 2) == 1;
  out.width = swap ? img.height : img.width;
  out.height = swap ? img.width : img.height;
  for (int p = 0; p < 3; ++p) {
    const auto& src = img.planes[static_cast<std::size_t>(p)];
    auto& dst = out.planes[static_cast<std::size_t>(p)];
    dst.resize(src.size());
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        int ox, oy;  // counter-clockwise rotation
        switch (k) {
          case 1: ox = y; oy = img.width - 1 - x; break;
          case 2: ox = img.width - 1 - x; oy = img.height - 1 - y; break;
          default: ox = img.height - 1 - y; oy = x; break;
        }
        dst[static_cast<std::size_t>(oy) * out.width + ox] =
            src[static_cast<std::size_t>(y) * img.width + x];
      }
  }
  return out;
}

void augment_pair(ImageBuffer& lr, ImageBuffer& hr, Rng& rng) {
  const bool flip = rng.next_below(2) == 1;
  const int quarters = static_cast<int>(rng.next_below(4));
  if ((quarters % 2) == 1 && (lr.width != lr.height || hr.width != hr.height))
    throw ArgumentError("augment: quarter-turn rotation requires square patches");
  if (flip) {
    lr = flip_horizontal(lr);
    hr = flip_horizontal(hr);
  }
  if (quarters != 0) {
    lr = rotate90(lr, quarters);
    hr = rotate90(hr, quarters);
  }
}

namespace {

bool supported_container(const fs::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(c));
  return e == ".png" || e == ".yuv";
}

}  // namespace

Manifest prepare_dataset(const PrepareOptions& opt) {
  if (opt.scale != 2 && opt.scale != 4 && opt.scale != 8 && opt.scale != 16)
    throw ArgumentError("prepare: scale must be one of {2, 4, 8, 16}");
  if (!fs::is_directory(opt.sdr_dir))
    throw IoError("prepare: '" + opt.sdr_dir.string() + "' is not a directory");
  if (!fs::is_directory(opt.hdr_dir))
    throw IoError("prepare: '" + opt.hdr_dir.string() + "' is not a directory");

  std::vector<fs::path> sources;
  for (const auto& de : fs::directory_iterator(opt.sdr_dir))
    if (de.is_regular_file() && supported_container(de.path()))
      sources.push_back(de.path());
  std::sort(sources.begin(), sources.end());
  if (sources.empty())
    throw ArgumentError("prepare: no images in '" + opt.sdr_dir.string() + "'");

  std::map<std::string, fs::path> targets;
  for (const auto& de : fs::directory_iterator(opt.hdr_dir))
    if (de.is_regular_file() && supported_container(de.path()))
      targets[de.path().stem().string()] = de.path();

  const std::string lr_sub = "lr_x" + std::to_string(opt.scale);
  fs::create_directories(opt.out_dir / lr_sub);

  Manifest m;
  m.base_dir = opt.out_dir;
  for (const auto& src : sources) {
    const std::string stem = src.stem().string();
    const auto it = targets.find(stem);
    if (it == targets.end())
      throw ArgumentError("prepare: no high-range counterpart for '" + stem +
                          "'");
    const ImageBuffer hr_sdr = load_image(src);
    const ImageBuffer hr_hdr = load_image(it->second);
    if (hr_sdr.width != hr_hdr.width || hr_sdr.height != hr_hdr.height)
      throw FormatError("prepare: '" + stem + "': source and target dims differ");
    if (hr_sdr.width % opt.scale != 0 || hr_sdr.height % opt.scale != 0)
      throw ShapeError("prepare: '" + stem + "' dims " +
                       std::to_string(hr_sdr.width) + "x" +
                       std::to_string(hr_sdr.height) +
                       " not divisible by scale " + std::to_string(opt.scale));

    const ImageBuffer lr = bicubic_resize(hr_sdr, hr_sdr.width / opt.scale,
                                          hr_sdr.height / opt.scale);
    const fs::path lr_path =
        opt.out_dir / lr_sub / (stem + src.extension().string());
    save_image(lr, lr_path);

    ManifestEntry e;
    e.lr = lr_sub + "/" + stem + src.extension().string();
    e.hr = fs::proximate(it->second, opt.out_dir).generic_string();
    e.scale = opt.scale;
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, opt.out_dir / "manifest.json");
  return m;
}

}  // namespace fdan
