#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fdan/image.hpp"

namespace fdan {

// Peak signal-to-noise ratio between luma planes, in dB, against the planes'
// shared peak code. Identical planes give +infinity.
double psnr(const LumaPlane& a, const LumaPlane& b);

// Mean single-scale structural similarity with an 11x11 Gaussian window
// (sigma 1.5), K1 = 0.01, K2 = 0.03, evaluated only where the window fits
// entirely inside the image.
double ssim(const LumaPlane& a, const LumaPlane& b);

struct MetricRow {
  std::string id;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<MetricRow> rows;

  double mean_psnr() const;  // infinities enter capped at 100 dB
  double mean_ssim() const;

  // id,psnr_db,ssim rows plus a MEAN row; PSNR capped at 100 dB.
  void write_csv(std::ostream& os) const;
};

}  // namespace fdan
