#ifndef ADVSTICKER_IO_HPP
#define ADVSTICKER_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "advsticker/geometry.hpp"
#include "advsticker/image.hpp"
#include "advsticker/param_space.hpp"

namespace advsticker {

using Bytes = std::vector<std::uint8_t>;

// 8-bit PNG codecs. Channel values are rounded and clamped on encode; a
// four-channel image stores alpha * 255.
Bytes encode_png(const Image& image);
// Decodes to RGB (3 channels) or RGBA (4 channels, alpha in [0, 1]).
Image decode_png(const Bytes& png);

std::string base64_encode(const Bytes& bytes);
// Throws std::invalid_argument on malformed input.
Bytes base64_decode(std::string_view text);

// Face images are RGB; an alpha channel is dropped.
Image load_face(const std::filesystem::path& path);
// Stickers are RGBA; images without alpha are fully opaque.
Sticker load_sticker(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& image);

// PNG (nonzero = valid) or text rows of 0/1, chosen by extension.
MaskMatrix load_mask(const std::filesystem::path& path);
void save_mask_png(const std::filesystem::path& path, const MaskMatrix& mask);

// CSV of reals (one row per image row), or 16-bit grayscale PNG with a JSON
// sidecar next to it (same stem, .json) holding {"depth_scale": px per gray
// level, "depth_offset": px}.
FaceSurface load_surface(const std::filesystem::path& path);
FaceSurface parse_surface_csv(std::string_view text);
void save_surface_csv(const std::filesystem::path& path, const FaceSurface& surface);
void save_surface_png16(const std::filesystem::path& path, const FaceSurface& surface,
                        double depth_scale, double depth_offset = 0.0);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace advsticker

#endif  // ADVSTICKER_IO_HPP
