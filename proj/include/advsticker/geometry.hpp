#ifndef ADVSTICKER_GEOMETRY_HPP
#define ADVSTICKER_GEOMETRY_HPP

#include <optional>
#include <vector>

#include "advsticker/image.hpp"
#include "advsticker/param_space.hpp"

namespace advsticker {

// RGBA raster; channel 3 is alpha in [0, 1] and marks the silhouette.
class Sticker {
 public:
  Sticker() = default;
  // Throws std::invalid_argument unless `rgba` has four channels and is at
  // least 1x1. Alpha is clamped into [0, 1].
  explicit Sticker(Image rgba);

  int width() const { return rgba_.width(); }
  int height() const { return rgba_.height(); }
  const Image& rgba() const { return rgba_; }

  static Sticker solid(int width, int height, float r, float g, float b,
                       float alpha = 1.0f);

  friend bool operator==(const Sticker&, const Sticker&) = default;

 private:
  Image rgba_;
};

// Per-pixel depth z(x, y) over the face image, in pixels. Larger z is closer
// to the camera.
class FaceSurface {
 public:
  FaceSurface() = default;
  FaceSurface(int width, int height, std::vector<double> depth);

  static FaceSurface flat(int width, int height, double z = 0.0);
  // Half-ellipsoid spanning the raster, peaking at `peak_depth` in the centre.
  static FaceSurface ellipsoid(int width, int height, double peak_depth);

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int row, int col) const {
    return depth_[static_cast<std::size_t>(row) * width_ + col];
  }
  // Bilinear depth at column x, row y; clamps to the border.
  double sample(double x, double y) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> depth_;
};

// Surface location: column x, row y, depth z.
struct SurfacePoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Parabola z = a (x - c)^2 + b across the bent sticker, whose projected
// width is bent_width.
struct BendParams {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double bent_width = 0.0;
};

// Arc length of the parabola with curvature `a` and vertex column `c`
// between columns `from` and `to`, by composite Simpson with four
// subintervals per pixel.
double arc_length(double a, double c, double from, double to);

// Width w_n whose arc length from 0 equals `width`, by bisection.
double solve_bent_width(double a, double c, double width);

// a = -delta_h / delta_s^2, then w_n and b = -a (w_n - c)^2.
BendParams bend_from_depth(double delta_h, double delta_s, double c,
                           double width);

// Measures the depth drop delta_h over +-delta_s around `apex` on its x-z
// slice and fits the bend. `c` is the apex column in sticker coordinates.
// Throws DegenerateSurface on non-finite depth.
BendParams fit_parabola(const FaceSurface& surface, const SurfacePoint& apex,
                        double delta_s, double width, double c);

// Resamples the sticker so its arc length along the parabola matches the
// original width. Output is h x round(w_n).
Sticker bend_sticker(const Sticker& sticker, const BendParams& bend);

// sign(face_height - 2 y0) * atan(dz / dy) in degrees, with sign(0) = +1.
double rotation_angle_from_slope(double dz, double dy, double face_height,
                                 double y0);

// Tilt of the y-z slice through `point`. dz is measured from the point
// outward (toward the nearer top/bottom image border) over delta_y rows.
double rotation_angle(const FaceSurface& surface, const SurfacePoint& point,
                      double delta_y, double face_height);

// Rotates the sticker plane about its horizontal mid-axis and projects it
// orthographically. Output height is round(h cos theta). |theta| < 90.
Sticker rotate_and_project(const Sticker& sticker, double theta_deg);

// In-plane rotation about the sticker centre onto an enlarged canvas.
// Positive angles turn counter-clockwise as displayed (rows grow downward).
Sticker rotate_in_plane(const Sticker& sticker, double angle_deg);

// Highest surface point inside the clipped rectangle; ties go to the first
// cell in row-major order.
SurfacePoint highest_point(const FaceSurface& surface, int top, int left,
                           int width, int height);

struct CompositeParams {
  PixelCoord position;  // sticker centre on the face
  double angle = 0.0;   // in-plane rotation, degrees
};

struct CompositeOptions {
  // Defaults: half the in-plane-rotated sticker width / height.
  std::optional<double> delta_s;
  std::optional<double> delta_y;
};

// Intermediate stages of the sticker deformation, for inspection.
struct StickerTrace {
  Sticker rotated;
  SurfacePoint apex;
  BendParams bend;
  Sticker bent;
  double tilt_deg = 0.0;
  Sticker projected;
};

StickerTrace deform_sticker(const Sticker& sticker, const FaceSurface& surface,
                            const CompositeParams& params,
                            const CompositeOptions& options = {});

// Top-left corner of a width x height raster centred at `position`.
PixelCoord placement_origin(PixelCoord position, int width, int height);

// Alpha-blends `sticker` centred at `position`; pixels falling outside the
// face are dropped. Touched channels are rounded and clamped to [0, 255].
Image blend(const Image& face, const Sticker& sticker, PixelCoord position);

// In-plane rotate, bend, tilt, then blend. Output has the face's shape.
Image composite(const Image& face, const Sticker& sticker,
                const FaceSurface& surface, const CompositeParams& params,
                const CompositeOptions& options = {});

}  // namespace advsticker

#endif  // ADVSTICKER_GEOMETRY_HPP
