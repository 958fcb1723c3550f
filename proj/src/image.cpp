#include "advsticker/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace advsticker {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1 || channels > 4) {
    throw std::invalid_argument("Image: invalid dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Pixel bilinear(const Image& image, double x, double y) {
  Pixel out{};
  if (image.empty()) return out;

  const double max_x = image.width() - 1;
  const double max_y = image.height() - 1;
  x = std::clamp(x, 0.0, max_x);
  y = std::clamp(y, 0.0, max_y);

  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, image.width() - 1);
  const int y1 = std::min(y0 + 1, image.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;

  const auto p00 = image.pixel(y0, x0);
  const auto p01 = image.pixel(y0, x1);
  const auto p10 = image.pixel(y1, x0);
  const auto p11 = image.pixel(y1, x1);
  for (int c = 0; c < image.channels(); ++c) {
    // Weights of exactly zero leave integer-coordinate samples untouched.
    double v = p00[c];
    if (fx != 0.0) v += fx * (p01[c] - p00[c]);
    if (fy != 0.0) {
      double lower = p10[c];
      if (fx != 0.0) lower += fx * (p11[c] - p10[c]);
      v += fy * (lower - v);
    }
    out[c] = static_cast<float>(v);
  }
  return out;
}

std::int64_t count_differing_pixels(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() ||
      a.channels() != b.channels()) {
    throw std::invalid_argument("count_differing_pixels: shape mismatch");
  }
  std::int64_t count = 0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      const auto pa = a.pixel(r, c);
      const auto pb = b.pixel(r, c);
      if (!std::equal(pa.begin(), pa.end(), pb.begin())) ++count;
    }
  }
  return count;
}

}  // namespace advsticker
