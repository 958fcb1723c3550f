#include "advsticker/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "advsticker/errors.hpp"

namespace advsticker {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double arc_integrand(double a, double c, double x) {
  const double d = x - c;
  return std::sqrt(1.0 + 4.0 * a * a * d * d);
}

// Source coordinate lies within the pixel footprint [-0.5, n - 0.5].
bool inside_footprint(double v, int n) { return v >= -0.5 && v <= n - 0.5; }

}  // namespace

Sticker::Sticker(Image rgba) : rgba_(std::move(rgba)) {
  if (rgba_.channels() != 4 || rgba_.width() < 1 || rgba_.height() < 1) {
    throw std::invalid_argument("Sticker: expected a non-empty RGBA raster");
  }
  for (int r = 0; r < rgba_.height(); ++r) {
    for (int c = 0; c < rgba_.width(); ++c) {
      float& a = rgba_.at(r, c, 3);
      a = std::isfinite(a) ? std::clamp(a, 0.0f, 1.0f) : 0.0f;
    }
  }
}

Sticker Sticker::solid(int width, int height, float r, float g, float b,
                       float alpha) {
  Image img(width, height, 4);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      auto p = img.pixel(y, x);
      p[0] = r;
      p[1] = g;
      p[2] = b;
      p[3] = alpha;
    }
  }
  return Sticker(std::move(img));
}

FaceSurface::FaceSurface(int width, int height, std::vector<double> depth)
    : width_(width), height_(height), depth_(std::move(depth)) {
  if (width < 1 || height < 1 ||
      depth_.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("FaceSurface: depth size does not match shape");
  }
}

FaceSurface FaceSurface::flat(int width, int height, double z) {
  return FaceSurface(width, height,
                     std::vector<double>(static_cast<std::size_t>(width) * height, z));
}

FaceSurface FaceSurface::ellipsoid(int width, int height, double peak_depth) {
  std::vector<double> depth(static_cast<std::size_t>(width) * height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double rx = width / 2.0;
  const double ry = height / 2.0;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double u = (c - cx) / rx;
      const double v = (r - cy) / ry;
      depth[static_cast<std::size_t>(r) * width + c] =
          peak_depth * std::sqrt(std::max(0.0, 1.0 - u * u - v * v));
    }
  }
  return FaceSurface(width, height, std::move(depth));
}

double FaceSurface::sample(double x, double y) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = at(y0, x0) + fx * (at(y0, x1) - at(y0, x0));
  const double bottom = at(y1, x0) + fx * (at(y1, x1) - at(y1, x0));
  return top + fy * (bottom - top);
}

double arc_length(double a, double c, double from, double to) {
  if (to == from) return 0.0;
  if (to < from) return -arc_length(a, c, to, from);
  const int n = 4 * std::max(1, static_cast<int>(std::ceil(to - from)));
  const double h = (to - from) / n;
  double sum = arc_integrand(a, c, from) + arc_integrand(a, c, to);
  for (int k = 1; k < n; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * arc_integrand(a, c, from + k * h);
  }
  return h * sum / 3.0;
}

double solve_bent_width(double a, double c, double width) {
  if (width <= 0.0) throw std::invalid_argument("solve_bent_width: width <= 0");
  if (a == 0.0) return width;
  double lo = 0.0;
  double hi = width;  // arc length over [0, w] is at least w
  for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (arc_length(a, c, 0.0, mid) < width) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

BendParams bend_from_depth(double delta_h, double delta_s, double c,
                           double width) {
  if (!(delta_s > 0.0)) throw std::invalid_argument("bend: delta_s must be > 0");
  if (!std::isfinite(delta_h)) throw DegenerateSurface("bend: non-finite depth");
  BendParams bp;
  // A concave-down slice only; a rising slice is treated as flat.
  bp.a = delta_h > 0.0 ? -delta_h / (delta_s * delta_s) : 0.0;
  bp.c = c;
  bp.bent_width = solve_bent_width(bp.a, c, width);
  bp.b = -bp.a * (bp.bent_width - c) * (bp.bent_width - c);
  return bp;
}

BendParams fit_parabola(const FaceSurface& surface, const SurfacePoint& apex,
                        double delta_s, double width, double c) {
  const double left = surface.sample(apex.x - delta_s, apex.y);
  const double right = surface.sample(apex.x + delta_s, apex.y);
  if (!std::isfinite(apex.z) || !std::isfinite(left) || !std::isfinite(right)) {
    throw DegenerateSurface("fit_parabola: non-finite x-z slice");
  }
  return bend_from_depth(apex.z - 0.5 * (left + right), delta_s, c, width);
}

Sticker bend_sticker(const Sticker& sticker, const BendParams& bend) {
  const int h = sticker.height();
  const int w = sticker.width();
  const int out_w = std::max(1, static_cast<int>(std::lround(bend.bent_width)));

  // Source column for each output column: cumulative arc length.
  std::vector<double> source_x(out_w, 0.0);
  for (int j = 1; j < out_w; ++j) {
    source_x[j] = source_x[j - 1] + arc_length(bend.a, bend.c, j - 1, j);
  }

  Image out(out_w, h, 4);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < out_w; ++j) {
      auto dst = out.pixel(i, j);
      if (!inside_footprint(source_x[j], w)) continue;
      const Pixel p = bilinear(sticker.rgba(), source_x[j], i);
      std::copy_n(p.begin(), 4, dst.begin());
    }
  }
  return Sticker(std::move(out));
}

double rotation_angle_from_slope(double dz, double dy, double face_height,
                                 double y0) {
  if (!(dy > 0.0)) throw std::invalid_argument("rotation_angle: dy must be > 0");
  if (!std::isfinite(dz)) throw DegenerateSurface("rotation_angle: non-finite slope");
  const double sign = face_height - 2.0 * y0 >= 0.0 ? 1.0 : -1.0;
  return sign * std::atan(dz / dy) * kRadToDeg;
}

double rotation_angle(const FaceSurface& surface, const SurfacePoint& point,
                      double delta_y, double face_height) {
  const double outward = face_height - 2.0 * point.y >= 0.0 ? -1.0 : 1.0;
  const double far = surface.sample(point.x, point.y + outward * delta_y);
  if (!std::isfinite(point.z) || !std::isfinite(far)) {
    throw DegenerateSurface("rotation_angle: non-finite y-z slice");
  }
  return rotation_angle_from_slope(point.z - far, delta_y, face_height, point.y);
}

Sticker rotate_and_project(const Sticker& sticker, double theta_deg) {
  if (!(std::abs(theta_deg) < 90.0)) {
    throw std::invalid_argument("rotate_and_project: |theta| must be < 90");
  }
  const double cos_t = std::cos(theta_deg * kDegToRad);
  const int h = sticker.height();
  const int w = sticker.width();
  const int out_h = std::max(1, static_cast<int>(std::lround(h * cos_t)));
  const double cy = (h - 1) / 2.0;
  const double out_cy = (out_h - 1) / 2.0;

  Image out(w, out_h, 4);
  for (int y = 0; y < out_h; ++y) {
    // Backward map: projected offset from the axis divided by cos(theta).
    const double src_y = cy + (y - out_cy) / cos_t;
    if (!inside_footprint(src_y, h)) continue;
    for (int x = 0; x < w; ++x) {
      const Pixel p = bilinear(sticker.rgba(), x, src_y);
      std::copy_n(p.begin(), 4, out.pixel(y, x).begin());
    }
  }
  return Sticker(std::move(out));
}

Sticker rotate_in_plane(const Sticker& sticker, double angle_deg) {
  const double phi = angle_deg * kDegToRad;
  const double cos_p = std::cos(phi);
  const double sin_p = std::sin(phi);
  const int w = sticker.width();
  const int h = sticker.height();
  const int out_w = std::max(
      1, static_cast<int>(std::ceil(w * std::abs(cos_p) + h * std::abs(sin_p) - 1e-9)));
  const int out_h = std::max(
      1, static_cast<int>(std::ceil(w * std::abs(sin_p) + h * std::abs(cos_p) - 1e-9)));
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double out_cx = (out_w - 1) / 2.0;
  const double out_cy = (out_h - 1) / 2.0;

  Image out(out_w, out_h, 4);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const double dx = x - out_cx;
      const double dy = y - out_cy;
      const double sx = cx + dx * cos_p - dy * sin_p;
      const double sy = cy + dx * sin_p + dy * cos_p;
      if (!inside_footprint(sx, w) || !inside_footprint(sy, h)) continue;
      const Pixel p = bilinear(sticker.rgba(), sx, sy);
      std::copy_n(p.begin(), 4, out.pixel(y, x).begin());
    }
  }
  return Sticker(std::move(out));
}

SurfacePoint highest_point(const FaceSurface& surface, int top, int left,
                           int width, int height) {
  const int r0 = std::clamp(top, 0, surface.height() - 1);
  const int c0 = std::clamp(left, 0, surface.width() - 1);
  const int r1 = std::clamp(top + height - 1, 0, surface.height() - 1);
  const int c1 = std::clamp(left + width - 1, 0, surface.width() - 1);
  SurfacePoint best{static_cast<double>(c0), static_cast<double>(r0),
                    surface.at(r0, c0)};
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double z = surface.at(r, c);
      if (!std::isfinite(z)) {
        throw DegenerateSurface("highest_point: non-finite depth");
      }
      if (z > best.z) best = {static_cast<double>(c), static_cast<double>(r), z};
    }
  }
  return best;
}

PixelCoord placement_origin(PixelCoord position, int width, int height) {
  return {position.row - height / 2, position.col - width / 2};
}

StickerTrace deform_sticker(const Sticker& sticker, const FaceSurface& surface,
                            const CompositeParams& params,
                            const CompositeOptions& options) {
  StickerTrace t;
  t.rotated = rotate_in_plane(sticker, params.angle);
  const int w = t.rotated.width();
  const int h = t.rotated.height();
  const PixelCoord origin = placement_origin(params.position, w, h);

  t.apex = highest_point(surface, origin.row, origin.col, w, h);
  const double delta_s = options.delta_s.value_or(w / 2.0);
  const double delta_y = options.delta_y.value_or(h / 2.0);

  const double c = std::clamp(t.apex.x - origin.col, 0.0, static_cast<double>(w));
  t.bend = fit_parabola(surface, t.apex, delta_s, w, c);
  t.bent = bend_sticker(t.rotated, t.bend);

  t.tilt_deg = rotation_angle(surface, t.apex, delta_y, surface.height());
  t.projected = rotate_and_project(t.bent, t.tilt_deg);
  return t;
}

Image blend(const Image& face, const Sticker& sticker, PixelCoord position) {
  Image out = face;
  const PixelCoord origin =
      placement_origin(position, sticker.width(), sticker.height());
  const int channels = std::min(face.channels(), 3);
  for (int y = 0; y < sticker.height(); ++y) {
    const int fy = origin.row + y;
    if (fy < 0 || fy >= face.height()) continue;
    for (int x = 0; x < sticker.width(); ++x) {
      const int fx = origin.col + x;
      if (fx < 0 || fx >= face.width()) continue;
      const auto s = sticker.rgba().pixel(y, x);
      const double alpha = s[3];
      if (!(alpha > 0.0)) continue;
      auto dst = out.pixel(fy, fx);
      for (int ch = 0; ch < channels; ++ch) {
        const double src = std::isfinite(s[ch]) ? s[ch] : 0.0;
        const double v = alpha * src + (1.0 - alpha) * dst[ch];
        dst[ch] = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
      }
    }
  }
  return out;
}

Image composite(const Image& face, const Sticker& sticker,
                const FaceSurface& surface, const CompositeParams& params,
                const CompositeOptions& options) {
  if (surface.width() != face.width() || surface.height() != face.height()) {
    throw std::invalid_argument("composite: surface and face shapes differ");
  }
  const StickerTrace t = deform_sticker(sticker, surface, params, options);
  return blend(face, t.projected, params.position);
}

}  // namespace advsticker
