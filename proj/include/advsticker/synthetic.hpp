#ifndef ADVSTICKER_SYNTHETIC_HPP
#define ADVSTICKER_SYNTHETIC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "advsticker/oracle.hpp"
#include "advsticker/param_space.hpp"

namespace advsticker {

// A desk-scale stand-in for a face-recognition model. Each bump raises the
// score of one wrong identity around a pasting position, modulated by the
// sticker angle, so successful positions form contiguous regions.
struct Bump {
  PixelCoord center;
  double sigma = 8.0;      // px
  double amplitude = 0.0;  // score units
  double phase = 0.0;      // preferred angle, degrees
  double angle_sigma = 25.0;
  int identity = 1;        // index into the gallery, never the ground truth
};

// A group of bumps drawn from the same ranges.
struct BumpFamily {
  int count = 1;
  double sigma_min = 4.0;
  double sigma_max = 12.0;
  // Amplitude as a multiple of the score gap to the ground truth; above 1 the
  // bump can flip the top-1 label near its centre.
  double amplitude_min = 1.0;
  double amplitude_max = 1.2;
  // > 0 adds a partner bump for a different wrong identity, this many sigmas
  // away, sharing the preferred angle.
  double pair_offset = 0.0;
  double angle_sigma = 25.0;  // angular response width, degrees
};

struct LandscapeParams {
  int gallery_size = 10;
  // Ground-truth score above the strongest other identity with no sticker.
  double margin = 3.0;
  // Spread of the other identities' base scores below that strongest one.
  double base_spread = 1.0;
  double angle_min = -90.0;
  double angle_max = 90.0;
  // Broad decoys that lower the ground truth without flipping it, and
  // narrow bumps whose small cores do flip it.
  std::vector<BumpFamily> families{
      BumpFamily{4, 10.0, 18.0, 0.75, 0.95, 0.0, 25.0},
      BumpFamily{3, 2.0, 3.0, 1.0, 1.1, 0.0, 60.0}};

  // Single bump strong enough to succeed over a wide core.
  static LandscapeParams single_bump(double sigma = 8.0, double amplitude = 1.4);
  // Two bumps that flip the label near their centres, both preferring angle 0.
  static LandscapeParams sweep_suite();
};

class SyntheticLandscape {
 public:
  SyntheticLandscape(std::vector<std::string> labels,
                     std::vector<double> base_scores, std::vector<Bump> bumps);

  // Deterministic in (seed, index, params). Bump centres lie on valid cells.
  static SyntheticLandscape generate(std::uint64_t seed, const ValidIndex& index,
                                     const LandscapeParams& params = {});

  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& ground_truth() const { return labels_.front(); }
  const std::vector<Bump>& bumps() const { return bumps_; }
  const std::vector<double>& base_scores() const { return base_scores_; }

  // Per-identity scores for a sticker centred at `position` with `angle`.
  std::vector<double> identity_scores(PixelCoord position, double angle) const;
  QueryResult score(PixelCoord position, double angle) const;
  // Probabilities with no sticker on the face.
  QueryResult no_attack() const;

 private:
  QueryResult softmax(const std::vector<double>& scores) const;

  std::vector<std::string> labels_;  // labels_[0] is the ground truth
  std::vector<double> base_scores_;
  std::vector<Bump> bumps_;
};

QueryResult synthetic_score(const SyntheticLandscape& landscape,
                            const ValidIndex& index, const ParamVector& theta);

class LandscapeEvaluator final : public ParamEvaluator {
 public:
  LandscapeEvaluator(const SyntheticLandscape& landscape, const ValidIndex& index,
                     std::optional<std::int64_t> budget = std::nullopt,
                     bool cache = true)
      : ParamEvaluator(budget, cache), landscape_(landscape), index_(index) {}

 protected:
  QueryResult score(const ParamVector& theta) override {
    return synthetic_score(landscape_, index_, theta);
  }

 private:
  const SyntheticLandscape& landscape_;
  const ValidIndex& index_;
};

// Estimated sticker parameters recovered from a composited face.
struct FootprintEstimate {
  bool found = false;
  PixelCoord position;   // nearest valid cell to the footprint centroid
  double angle = 0.0;    // principal-axis orientation, degrees in (-90, 90]
  std::int64_t pixels = 0;
};

// Compares `image` against the clean face and summarises the changed pixels.
FootprintEstimate estimate_footprint(const Image& clean_face, const Image& image,
                                     const ValidIndex& index);

// Image-facing adapter over a landscape, for serving it over HTTP. Sticker
// parameters are estimated from the changed pixels, so scores approximate
// synthetic_score of the true parameters.
class LandscapeImageOracle final : public ImageOracle {
 public:
  LandscapeImageOracle(const SyntheticLandscape& landscape, Image clean_face,
                       ValidIndex index)
      : landscape_(landscape), clean_face_(std::move(clean_face)),
        index_(std::move(index)) {}

  QueryResult query(const Image& face) override;
  std::vector<std::string> labels() override { return landscape_.labels(); }

 private:
  const SyntheticLandscape& landscape_;
  Image clean_face_;
  ValidIndex index_;
};

// Elliptical face region with the eyes, nose bridge and mouth removed.
MaskMatrix synthetic_face_mask(int rows, int cols);
// Smooth skin-toned RGB face of the given size.
Image synthetic_face_image(int rows, int cols);

}  // namespace advsticker

#endif  // ADVSTICKER_SYNTHETIC_HPP
