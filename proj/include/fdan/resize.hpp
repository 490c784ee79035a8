#pragma once

#include <vector>

#include "fdan/image.hpp"
#include "fdan/tensor.hpp"

namespace fdan {

// Separable bicubic resampling (Catmull-Rom flavour, a = -0.5) with
// half-pixel centers and edge clamp; the kernel footprint widens when
// shrinking so minification stays low-pass. Used both to synthesize the
// low-resolution training inputs and by tests as the degradation oracle.
std::vector<float> bicubic_resize_plane(const std::vector<float>& src, int w,
                                        int h, int ow, int oh);

// Per-plane resize of coded values; output keeps depth/space/format.
ImageBuffer bicubic_resize(const ImageBuffer& img, int ow, int oh);

// Per-channel resize of an (N, C, H, W) tensor.
Tensor bicubic_resize(const Tensor& t, int oh, int ow);

}  // namespace fdan
