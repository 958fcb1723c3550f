#include "advsticker/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace advsticker {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

bool in_ellipse(double r, double c, double cr, double cc, double rr, double rc) {
  const double u = (r - cr) / rr;
  const double v = (c - cc) / rc;
  return u * u + v * v <= 1.0;
}

}  // namespace

SyntheticLandscape::SyntheticLandscape(std::vector<std::string> labels,
                                       std::vector<double> base_scores,
                                       std::vector<Bump> bumps)
    : labels_(std::move(labels)), base_scores_(std::move(base_scores)),
      bumps_(std::move(bumps)) {
  if (labels_.size() < 2 || labels_.size() != base_scores_.size()) {
    throw std::invalid_argument("SyntheticLandscape: need >= 2 labels with scores");
  }
  for (const auto& b : bumps_) {
    if (b.identity <= 0 || b.identity >= static_cast<int>(labels_.size()) ||
        !(b.sigma > 0.0)) {
      throw std::invalid_argument("SyntheticLandscape: bad bump");
    }
  }
}

LandscapeParams LandscapeParams::single_bump(double sigma, double amplitude) {
  LandscapeParams p;
  p.families = {BumpFamily{1, sigma, sigma, amplitude, amplitude, 0.0, 25.0}};
  return p;
}

LandscapeParams LandscapeParams::sweep_suite() {
  LandscapeParams p;
  p.angle_min = p.angle_max = 0.0;
  p.families = {BumpFamily{2, 4.0, 10.0, 1.1, 1.4, 0.0, 25.0}};
  return p;
}

SyntheticLandscape SyntheticLandscape::generate(std::uint64_t seed,
                                                const ValidIndex& index,
                                                const LandscapeParams& params) {
  if (params.gallery_size < 2 || params.families.empty()) {
    throw std::invalid_argument("LandscapeParams: need gallery >= 2 and a bump family");
  }
  SeededRng rng(seed);

  std::vector<std::string> labels;
  std::vector<double> base(params.gallery_size);
  for (int k = 0; k < params.gallery_size; ++k) labels.push_back("id" + std::to_string(k));
  base[0] = params.margin;
  base[1] = 0.0;
  for (int k = 2; k < params.gallery_size; ++k) {
    base[k] = -rng.uniform_real(0.0, params.base_spread);
  }

  std::vector<Bump> bumps;
  for (const auto& fam : params.families) {
    auto amplitude = [&](int identity) {
      return (base[0] - base[identity]) *
             rng.uniform_real(fam.amplitude_min, fam.amplitude_max);
    };
    for (int i = 0; i < fam.count; ++i) {
      Bump b;
      b.center = index.coord(rng.uniform_int(0, index.size() - 1));
      b.sigma = rng.uniform_real(fam.sigma_min, fam.sigma_max);
      b.identity = static_cast<int>(rng.uniform_int(1, params.gallery_size - 1));
      b.phase = rng.uniform_real(params.angle_min, params.angle_max);
      b.angle_sigma = fam.angle_sigma;
      b.amplitude = amplitude(b.identity);
      bumps.push_back(b);
      if (fam.pair_offset <= 0.0 || params.gallery_size < 3) continue;

      Bump partner = b;
      partner.identity = static_cast<int>(rng.uniform_int(1, params.gallery_size - 2));
      if (partner.identity >= b.identity) ++partner.identity;
      partner.amplitude = amplitude(partner.identity);
      // Off-mask partners are redrawn; after 16 misses the pair collapses.
      for (int attempt = 0; attempt < 16; ++attempt) {
        const double dir = rng.uniform_real(0.0, 2.0 * std::numbers::pi);
        const double d = fam.pair_offset * b.sigma;
        const PixelCoord at{
            static_cast<int>(std::lround(b.center.row + d * std::sin(dir))),
            static_cast<int>(std::lround(b.center.col + d * std::cos(dir)))};
        if (index.mask().valid(at.row, at.col)) {
          partner.center = at;
          break;
        }
      }
      bumps.push_back(partner);
    }
  }
  return SyntheticLandscape(std::move(labels), std::move(base), std::move(bumps));
}

std::vector<double> SyntheticLandscape::identity_scores(PixelCoord position,
                                                        double angle) const {
  std::vector<double> s = base_scores_;
  for (const auto& b : bumps_) {
    const double dr = position.row - b.center.row;
    const double dc = position.col - b.center.col;
    const double spatial = std::exp(-(dr * dr + dc * dc) / (2.0 * b.sigma * b.sigma));
    const double da = (angle - b.phase) / b.angle_sigma;
    const double angular = std::exp(-0.5 * da * da);
    s[b.identity] += b.amplitude * spatial * angular;
  }
  return s;
}

QueryResult SyntheticLandscape::softmax(const std::vector<double>& scores) const {
  const double peak = *std::max_element(scores.begin(), scores.end());
  std::vector<double> e(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    e[k] = std::exp(scores[k] - peak);
    total += e[k];
  }
  std::vector<LabelScore> out;
  out.reserve(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out.push_back({labels_[k], e[k] / total});
  }
  return QueryResult(std::move(out));
}

QueryResult SyntheticLandscape::score(PixelCoord position, double angle) const {
  return softmax(identity_scores(position, angle));
}

QueryResult SyntheticLandscape::no_attack() const { return softmax(base_scores_); }

QueryResult synthetic_score(const SyntheticLandscape& landscape,
                            const ValidIndex& index, const ParamVector& theta) {
  return landscape.score(index.coord(theta.position_index), theta.angle);
}

FootprintEstimate estimate_footprint(const Image& clean_face, const Image& image,
                                     const ValidIndex& index) {
  if (clean_face.width() != image.width() || clean_face.height() != image.height() ||
      clean_face.channels() != image.channels()) {
    throw std::invalid_argument("estimate_footprint: image shape differs from face");
  }
  FootprintEstimate est;
  double sum_r = 0.0, sum_c = 0.0;
  std::vector<PixelCoord> changed;
  for (int r = 0; r < image.height(); ++r) {
    for (int c = 0; c < image.width(); ++c) {
      const auto a = image.pixel(r, c);
      const auto b = clean_face.pixel(r, c);
      if (std::equal(a.begin(), a.end(), b.begin())) continue;
      changed.push_back({r, c});
      sum_r += r;
      sum_c += c;
    }
  }
  est.pixels = static_cast<std::int64_t>(changed.size());
  if (changed.empty()) return est;
  est.found = true;

  const double n = static_cast<double>(changed.size());
  const double mr = sum_r / n;
  const double mc = sum_c / n;
  double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
  for (const auto& p : changed) {
    const double dx = p.col - mc;
    const double dy = p.row - mr;
    mu20 += dx * dx;
    mu02 += dy * dy;
    mu11 += dx * dy;
  }
  // Orientation in image axes (rows down); counter-clockwise on screen is the
  // negated angle.
  const double orientation = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
  double angle = -orientation / kDegToRad;
  if (angle <= -90.0) angle += 180.0;
  est.angle = angle;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : index.coords()) {
    const double d = (p.row - mr) * (p.row - mr) + (p.col - mc) * (p.col - mc);
    if (d < best) {
      best = d;
      est.position = p;
    }
  }
  return est;
}

QueryResult LandscapeImageOracle::query(const Image& face) {
  const FootprintEstimate est = estimate_footprint(clean_face_, face, index_);
  if (!est.found) return landscape_.no_attack();
  return landscape_.score(est.position, est.angle);
}

MaskMatrix synthetic_face_mask(int rows, int cols) {
  MaskMatrix mask = MaskMatrix::filled(rows, cols, false);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double y = (r + 0.5) / rows;
      const double x = (c + 0.5) / cols;
      bool ok = in_ellipse(y, x, 0.5, 0.5, 0.44, 0.38);
      if (in_ellipse(y, x, 0.40, 0.32, 0.07, 0.11)) ok = false;  // eyes
      if (in_ellipse(y, x, 0.40, 0.68, 0.07, 0.11)) ok = false;
      if (y > 0.36 && y < 0.64 && x > 0.44 && x < 0.56) ok = false;  // nose
      if (in_ellipse(y, x, 0.74, 0.5, 0.06, 0.16)) ok = false;  // mouth
      mask.set(r, c, ok);
    }
  }
  return mask;
}

Image synthetic_face_image(int rows, int cols) {
  Image img(cols, rows, 3);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double y = (r + 0.5) / rows;
      const double x = (c + 0.5) / cols;
      std::array<double, 3> rgb{40.0, 40.0, 60.0};
      if (in_ellipse(y, x, 0.5, 0.5, 0.46, 0.40)) {
        const double u = (y - 0.5) / 0.46;
        const double v = (x - 0.5) / 0.40;
        const double shade = 0.75 + 0.25 * std::sqrt(std::max(0.0, 1.0 - u * u - v * v));
        rgb = {224.0 * shade, 172.0 * shade, 140.0 * shade};
        if (in_ellipse(y, x, 0.40, 0.32, 0.035, 0.07) ||
            in_ellipse(y, x, 0.40, 0.68, 0.035, 0.07)) {
          rgb = {50.0, 40.0, 35.0};
        }
        if (in_ellipse(y, x, 0.74, 0.5, 0.03, 0.12)) rgb = {170.0, 70.0, 70.0};
      }
      for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = static_cast<float>(std::round(rgb[ch]));
    }
  }
  return img;
}

}  // namespace advsticker
