#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fdan/image.hpp"
#include "fdan/rng.hpp"

namespace fdan {

// One training pair: a standard-range low-resolution input and the
// high-range high-resolution target it should reconstruct.
struct ManifestEntry {
  std::string lr;
  std::string hr;
  int scale = 0;
};

struct Manifest {
  std::filesystem::path base_dir;  // entry paths resolve against this
  std::vector<ManifestEntry> entries;
};

// JSON array of {"lr", "hr", "scale"} objects; unknown keys rejected.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const Manifest& m, const std::filesystem::path& path);

struct SamplePair {
  ImageBuffer lr;
  ImageBuffer hr;
  int scale = 0;
  std::string id;
};

// Loads and validates one entry (dimension relation, scale consistency).
SamplePair load_pair(const Manifest& m, std::size_t index);

ImageBuffer crop(const ImageBuffer& img, int x0, int y0, int w, int h);

// Random patch pair with the HR origin uniform over multiples of scale, so
// the LR window is exactly the HR window reduced. Draws x then y.
std::pair<ImageBuffer, ImageBuffer> crop_aligned_pair(const ImageBuffer& lr,
                                                      const ImageBuffer& hr,
                                                      int scale, int patch,
                                                      Rng& rng);

ImageBuffer flip_horizontal(const ImageBuffer& img);
ImageBuffer rotate90(const ImageBuffer& img, int quarter_turns);

// Applies the same random flip (p = 1/2) and rotation (uniform over
// {0, 90, 180, 270} degrees) to both patches. Draws flip then rotation.
void augment_pair(ImageBuffer& lr, ImageBuffer& hr, Rng& rng);

struct PrepareOptions {
  std::filesystem::path sdr_dir;  // high-resolution standard-range sources
  std::filesystem::path hdr_dir;  // matching high-range versions (same stem)
  std::filesystem::path out_dir;
  int scale = 4;
};

// Synthesizes the low-resolution inputs by bicubic reduction of the
// standard-range sources and writes out_dir/manifest.json pairing them with
// the high-range targets.
Manifest prepare_dataset(const PrepareOptions& opt);

}  // namespace fdan
