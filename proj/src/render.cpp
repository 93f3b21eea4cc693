#include "ssm/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <zlib.h>

namespace ssm {

namespace {

struct Histogram {
  int w = 0, h = 0;
  std::vector<double> mass;
};

Histogram rasterize(const DiscreteMeasure& mu, int resolution) {
  if (resolution < 1 || resolution > 4096)
    throw std::invalid_argument("resolution must lie in [1, 4096]");
  if (mu.size() == 0) throw std::invalid_argument("cannot render an empty measure");

  double x0 = mu.atoms()[0].real(), x1 = x0, y0 = mu.atoms()[0].imag(), y1 = y0;
  for (const auto& a : mu.atoms()) {
    x0 = std::min(x0, a.real());
    x1 = std::max(x1, a.real());
    y0 = std::min(y0, a.imag());
    y1 = std::max(y1, a.imag());
  }
  double dx = x1 - x0, dy = y1 - y0;
  if (dx <= 0) {
    x0 -= 0.5;
    x1 += 0.5;
    dx = 1.0;
  }
  if (dy <= 0) {
    y0 -= 0.5;
    y1 += 0.5;
    dy = 1.0;
  }
  x0 -= 0.05 * dx;
  x1 += 0.05 * dx;
  y0 -= 0.05 * dy;
  y1 += 0.05 * dy;

  Histogram hist;
  hist.w = resolution;
  hist.h = resolution;
  hist.mass.assign(static_cast<size_t>(resolution) * resolution, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto px = static_cast<int>((mu.atoms()[i].real() - x0) / (x1 - x0) * resolution);
    const auto py = static_cast<int>((mu.atoms()[i].imag() - y0) / (y1 - y0) * resolution);
    const int cx = std::clamp(px, 0, resolution - 1);
    const int cy = std::clamp(py, 0, resolution - 1);
    // image rows run top-down
    hist.mass[static_cast<size_t>(resolution - 1 - cy) * resolution + cx] +=
        to_double(mu.weights()[i]);
  }
  return hist;
}

// sampled viridis control points
constexpr std::uint8_t kPalette[9][3] = {
    {68, 1, 84},   {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
    {39, 173, 129}, {92, 200, 99}, {170, 220, 50}, {253, 231, 37}};

void palette_color(double t, std::uint8_t rgb[3]) {
  t = std::clamp(t, 0.0, 1.0) * 8.0;
  const int lo = std::min(7, static_cast<int>(t));
  const double f = t - lo;
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<std::uint8_t>(
        std::lround(kPalette[lo][c] + f * (kPalette[lo + 1][c] - kPalette[lo][c])));
}

void push_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
  push_be32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0, out.data() + start, static_cast<uInt>(out.size() - start));
  push_be32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> png_from_rgb(int width, int height,
                                       const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<size_t>(width) * height * 3)
    throw std::invalid_argument("rgb buffer size mismatch");
  // raw scanlines, filter byte 0
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<size_t>(height) * (1 + 3 * static_cast<size_t>(width)));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = rgb.data() + static_cast<size_t>(y) * width * 3;
    raw.insert(raw.end(), row, row + static_cast<size_t>(width) * 3);
  }

  uLongf comp_cap = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> compressed(comp_cap);
  if (compress2(compressed.data(), &comp_cap, raw.data(), static_cast<uLong>(raw.size()),
                9) != Z_OK)
    throw std::runtime_error("zlib compression failed");
  compressed.resize(comp_cap);

  std::vector<std::uint8_t> png{0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  std::vector<std::uint8_t> ihdr;
  push_be32(ihdr, static_cast<std::uint32_t>(width));
  push_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // RGB
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  push_chunk(png, "IHDR", ihdr);
  push_chunk(png, "IDAT", compressed);
  push_chunk(png, "IEND", {});
  return png;
}

std::vector<std::uint8_t> render_png(const DiscreteMeasure& mu, int resolution) {
  const Histogram hist = rasterize(mu, resolution);
  double max_mass = 0.0;
  for (double m : hist.mass) max_mass = std::max(max_mass, m);
  double min_pos = max_mass;
  for (double m : hist.mass)
    if (m > 0.0) min_pos = std::min(min_pos, m);
  const double lo = std::log2(std::max(min_pos, 1e-300));
  const double hi = std::log2(std::max(max_mass, 1e-300));
  const double span = hi > lo ? hi - lo : 1.0;

  std::vector<std::uint8_t> rgb(static_cast<size_t>(hist.w) * hist.h * 3, 0);
  for (std::size_t i = 0; i < hist.mass.size(); ++i) {
    const double m = hist.mass[i];
    if (m > 0.0) palette_color(0.15 + 0.85 * (std::log2(m) - lo) / span, &rgb[i * 3]);
  }
  return png_from_rgb(hist.w, hist.h, rgb);
}

double pixel_occupancy(const DiscreteMeasure& mu, int resolution) {
  const Histogram hist = rasterize(mu, resolution);
  std::size_t lit = 0;
  for (double m : hist.mass)
    if (m > 0.0) ++lit;
  return static_cast<double>(lit) / static_cast<double>(hist.mass.size());
}

}  // namespace ssm
