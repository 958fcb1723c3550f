#ifndef ADVSTICKER_PARAM_SPACE_HPP
#define ADVSTICKER_PARAM_SPACE_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advsticker/rng.hpp"

namespace advsticker {

struct PixelCoord {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

// Binary map of permissible pasting pixels (cheeks, forehead, ...).
class MaskMatrix {
 public:
  MaskMatrix() = default;
  // Every nonzero cell counts as valid.
  MaskMatrix(int rows, int cols, std::vector<std::uint8_t> cells);

  // Rows of '0'/'1' characters; whitespace-only lines are skipped.
  static MaskMatrix parse_text(std::string_view text);
  static MaskMatrix filled(int rows, int cols, bool value);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool contains(int row, int col) const {
    return row >= 0 && col >= 0 && row < rows_ && col < cols_;
  }
  bool valid(int row, int col) const {
    return contains(row, col) && cells_[index(row, col)] != 0;
  }
  void set(int row, int col, bool value) {
    cells_[index(row, col)] = value ? 1 : 0;
  }
  std::int64_t count() const;

  std::string to_text() const;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * cols_ + col;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> cells_;
};

// Row-major enumeration of the valid cells of a mask, with its inverse.
class ValidIndex {
 public:
  explicit ValidIndex(const MaskMatrix& mask);

  std::int64_t size() const { return static_cast<std::int64_t>(coords_.size()); }
  const PixelCoord& coord(std::int64_t i) const { return coords_.at(i); }
  const std::vector<PixelCoord>& coords() const { return coords_; }
  std::optional<std::int64_t> index_of(PixelCoord p) const;
  const MaskMatrix& mask() const { return mask_; }

 private:
  MaskMatrix mask_;
  std::vector<PixelCoord> coords_;
  std::vector<std::int64_t> reverse_;  // -1 for masked-out cells
};

// Throws EmptyMask when no cell is valid.
ValidIndex build_valid_index(const MaskMatrix& mask);

struct Range {
  double lower = 0.0;
  double upper = 0.0;
};

struct ParamBounds {
  Range position;
  Range angle{-90.0, 90.0};

  static ParamBounds for_index(const ValidIndex& index,
                               Range angle = {-90.0, 90.0});
  // Throws std::invalid_argument when lower > upper anywhere.
  void validate() const;
};

// theta = (position index into the ValidIndex, in-plane angle in degrees).
struct ParamVector {
  std::int64_t position_index = 0;
  double angle = 0.0;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

// Real-valued intermediate produced by differential arithmetic.
struct RealParams {
  double position = 0.0;
  double angle = 0.0;
};

// Round the position to the nearest integer, then clamp both parameters.
ParamVector clip(const RealParams& v, const ParamBounds& bounds);
ParamVector clip(const ParamVector& v, const ParamBounds& bounds);

// Compass directions, clockwise from north. Values are the 1-based j of the
// neighbourhood operator.
enum class Direction { N = 1, NE, E, SE, S, SW, W, NW };

PixelCoord direction_offset(Direction d);
// The r directions used by inbreeding: all eight for r = 8, the cardinal four
// for r = 4. Other values throw std::invalid_argument.
std::vector<Direction> neighbourhood(int r);

class VisitedSet {
 public:
  explicit VisitedSet(std::int64_t size = 0) : seen_(size, false) {}

  bool contains(std::int64_t index) const {
    return index >= 0 && index < static_cast<std::int64_t>(seen_.size()) &&
           seen_[index];
  }
  void insert(std::int64_t index);
  std::int64_t count() const { return count_; }

 private:
  std::vector<bool> seen_;
  std::int64_t count_ = 0;
};

// Moves the position `step` pixels along `direction`. Masked-out, off-image
// or visited targets double the step, at most kMaxStepDoublings times, before
// NoValidNeighbor is thrown. The angle is carried over unchanged.
inline constexpr int kMaxStepDoublings = 6;
ParamVector neighbor(const ParamVector& v, Direction direction, int step,
                     const ValidIndex& index, const VisitedSet& visited);

ParamVector sample_uniform(RandomSource& rng, const ParamBounds& bounds);

}  // namespace advsticker

#endif  // ADVSTICKER_PARAM_SPACE_HPP
