#pragma once

#include <cstdint>
#include <vector>

#include "ssm/measure.hpp"

namespace ssm {

// Log-scaled mass histogram of the measure over a pixel grid covering
// the support's bounding box plus a 5% margin. Fixed embedded palette;
// byte-identical output for identical inputs.
std::vector<std::uint8_t> render_png(const DiscreteMeasure& mu, int resolution);

// Occupied-pixel fraction of the same histogram (pixels with mass > 0).
double pixel_occupancy(const DiscreteMeasure& mu, int resolution);

// Deterministic PNG from raw 8-bit RGB scanline data (top-down rows).
std::vector<std::uint8_t> png_from_rgb(int width, int height,
                                       const std::vector<std::uint8_t>& rgb);

}  // namespace ssm
