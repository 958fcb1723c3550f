#include "advsticker/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace advsticker {

namespace {

// OpenCV stores BGR(A); channel order is swapped on the way in and out.
Image from_mat(const cv::Mat& mat, int want_channels) {
  if (mat.empty()) throw std::runtime_error("image decode failed");
  cv::Mat m8;
  if (mat.depth() == CV_16U) {
    mat.convertTo(m8, CV_8U, 1.0 / 257.0);
  } else if (mat.depth() == CV_8U) {
    m8 = mat;
  } else {
    throw std::runtime_error("unsupported image depth");
  }
  const int src_channels = m8.channels();
  const int channels = want_channels > 0 ? want_channels : (src_channels == 4 ? 4 : 3);
  Image img(m8.cols, m8.rows, channels);
  for (int r = 0; r < m8.rows; ++r) {
    const std::uint8_t* row = m8.ptr<std::uint8_t>(r);
    for (int c = 0; c < m8.cols; ++c) {
      const std::uint8_t* px = row + c * src_channels;
      float rgb[3];
      if (src_channels == 1) {
        rgb[0] = rgb[1] = rgb[2] = px[0];
      } else {
        rgb[0] = px[2];
        rgb[1] = px[1];
        rgb[2] = px[0];
      }
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = rgb[ch];
      if (channels == 4) {
        img.at(r, c, 3) = src_channels == 4 ? px[3] / 255.0f : 1.0f;
      }
    }
  }
  return img;
}

std::uint8_t to_byte(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

cv::Mat to_mat(const Image& image) {
  const int ch = image.channels();
  if (ch != 1 && ch != 3 && ch != 4) throw std::invalid_argument("to_mat: channels");
  cv::Mat mat(image.height(), image.width(), CV_8UC(ch));
  for (int r = 0; r < image.height(); ++r) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(r);
    for (int c = 0; c < image.width(); ++c) {
      const auto p = image.pixel(r, c);
      std::uint8_t* px = row + c * ch;
      if (ch == 1) {
        px[0] = to_byte(p[0]);
        continue;
      }
      px[0] = to_byte(p[2]);
      px[1] = to_byte(p[1]);
      px[2] = to_byte(p[0]);
      if (ch == 4) px[3] = to_byte(p[3] * 255.0);
    }
  }
  return mat;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

cv::Mat read_mat(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw std::runtime_error("cannot read image " + path.string());
  return mat;
}

}  // namespace

Bytes encode_png(const Image& image) {
  Bytes out;
  if (!cv::imencode(".png", to_mat(image), out)) {
    throw std::runtime_error("PNG encode failed");
  }
  return out;
}

Image decode_png(const Bytes& png) {
  if (png.empty()) throw std::invalid_argument("decode_png: empty buffer");
  return from_mat(cv::imdecode(png, cv::IMREAD_UNCHANGED), 0);
}

std::string base64_encode(const Bytes& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(n);
  return out;
}

Bytes base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64: bad length");
  Bytes out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("base64: malformed input");
  // EVP_DecodeBlock keeps the padding bytes.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

Image load_face(const std::filesystem::path& path) { return from_mat(read_mat(path), 3); }

Sticker load_sticker(const std::filesystem::path& path) {
  return Sticker(from_mat(read_mat(path), 4));
}

void save_image(const std::filesystem::path& path, const Image& image) {
  if (!cv::imwrite(path.string(), to_mat(image))) {
    throw std::runtime_error("cannot write image " + path.string());
  }
}

MaskMatrix load_mask(const std::filesystem::path& path) {
  if (lower_extension(path) != ".png") return MaskMatrix::parse_text(read_text_file(path));
  cv::Mat mat = read_mat(path);
  if (mat.channels() != 1) throw std::runtime_error("mask PNG must be single-channel");
  std::vector<std::uint8_t> cells(static_cast<std::size_t>(mat.rows) * mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    for (int c = 0; c < mat.cols; ++c) {
      const bool on = mat.depth() == CV_16U ? mat.at<std::uint16_t>(r, c) != 0
                                            : mat.at<std::uint8_t>(r, c) != 0;
      cells[static_cast<std::size_t>(r) * mat.cols + c] = on ? 1 : 0;
    }
  }
  return MaskMatrix(mat.rows, mat.cols, std::move(cells));
}

void save_mask_png(const std::filesystem::path& path, const MaskMatrix& mask) {
  cv::Mat mat(mask.rows(), mask.cols(), CV_8UC1);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) mat.at<std::uint8_t>(r, c) = mask.valid(r, c) ? 255 : 0;
  }
  if (!cv::imwrite(path.string(), mat)) throw std::runtime_error("cannot write " + path.string());
}

FaceSurface parse_surface_csv(std::string_view text) {
  std::vector<double> depth;
  int rows = 0;
  int cols = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string cell;
    int n = 0;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      const double v = std::stod(cell, &used);
      if (!std::isfinite(v)) throw std::invalid_argument("surface CSV: non-finite depth");
      depth.push_back(v);
      ++n;
    }
    if (cols < 0) cols = n;
    if (n != cols) throw std::invalid_argument("surface CSV: ragged rows");
    ++rows;
  }
  return FaceSurface(std::max(cols, 0), rows, std::move(depth));
}

FaceSurface load_surface(const std::filesystem::path& path) {
  if (lower_extension(path) != ".png") return parse_surface_csv(read_text_file(path));

  std::filesystem::path sidecar = path;
  sidecar.replace_extension(".json");
  double scale = 1.0;
  double offset = 0.0;
  if (std::filesystem::exists(sidecar)) {
    const auto meta = nlohmann::json::parse(read_text_file(sidecar));
    scale = meta.value("depth_scale", 1.0);
    offset = meta.value("depth_offset", 0.0);
  }
  cv::Mat mat = read_mat(path);
  if (mat.channels() != 1) throw std::runtime_error("surface PNG must be grayscale");
  std::vector<double> depth(static_cast<std::size_t>(mat.rows) * mat.cols);
  for (int r = 0; r < mat.rows; ++r) {
    for (int c = 0; c < mat.cols; ++c) {
      const double level = mat.depth() == CV_16U ? mat.at<std::uint16_t>(r, c)
                                                 : mat.at<std::uint8_t>(r, c);
      depth[static_cast<std::size_t>(r) * mat.cols + c] = offset + scale * level;
    }
  }
  return FaceSurface(mat.cols, mat.rows, std::move(depth));
}

void save_surface_csv(const std::filesystem::path& path, const FaceSurface& surface) {
  std::ostringstream out;
  out.precision(17);
  for (int r = 0; r < surface.height(); ++r) {
    for (int c = 0; c < surface.width(); ++c) {
      if (c) out << ',';
      out << surface.at(r, c);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

void save_surface_png16(const std::filesystem::path& path, const FaceSurface& surface,
                        double depth_scale, double depth_offset) {
  if (!(depth_scale > 0.0)) throw std::invalid_argument("depth_scale must be > 0");
  cv::Mat mat(surface.height(), surface.width(), CV_16UC1);
  for (int r = 0; r < surface.height(); ++r) {
    for (int c = 0; c < surface.width(); ++c) {
      const double level = std::round((surface.at(r, c) - depth_offset) / depth_scale);
      mat.at<std::uint16_t>(r, c) = static_cast<std::uint16_t>(std::clamp(level, 0.0, 65535.0));
    }
  }
  if (!cv::imwrite(path.string(), mat)) throw std::runtime_error("cannot write " + path.string());
  std::filesystem::path sidecar = path;
  sidecar.replace_extension(".json");
  write_text_file(sidecar, nlohmann::json{{"depth_scale", depth_scale},
                                          {"depth_offset", depth_offset}}
                               .dump(2));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace advsticker
