#ifndef ADVSTICKER_IMAGE_HPP
#define ADVSTICKER_IMAGE_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace advsticker {

// Interleaved float raster. Color channels hold 0..255 values; when a fourth
// channel is present it is an alpha in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int channel) {
    return data_[index(row, col, channel)];
  }
  float at(int row, int col, int channel) const {
    return data_[index(row, col, channel)];
  }

  std::span<float> pixel(int row, int col) {
    return {data_.data() + index(row, col, 0),
            static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int row, int col) const {
    return {data_.data() + index(row, col, 0),
            static_cast<std::size_t>(channels_)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int row, int col, int channel) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ +
           channel;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

using Pixel = std::array<float, 4>;

// Four-neighbour bilinear sample at column x, row y. Coordinates outside the
// raster are clamped to the nearest edge. Unused trailing channels are zero.
Pixel bilinear(const Image& image, double x, double y);

// Number of pixels whose channel values differ anywhere.
std::int64_t count_differing_pixels(const Image& a, const Image& b);

}  // namespace advsticker

#endif  // ADVSTICKER_IMAGE_HPP
