#include "advsticker/param_space.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "advsticker/errors.hpp"

namespace advsticker {

MaskMatrix::MaskMatrix(int rows, int cols, std::vector<std::uint8_t> cells)
    : rows_(rows), cols_(cols), cells_(std::move(cells)) {
  if (rows < 0 || cols < 0 ||
      cells_.size() != static_cast<std::size_t>(rows) * cols) {
    throw std::invalid_argument("MaskMatrix: cell count does not match shape");
  }
  for (auto& c : cells_) c = c != 0 ? 1 : 0;
}

MaskMatrix MaskMatrix::parse_text(std::string_view text) {
  std::vector<std::uint8_t> cells;
  int rows = 0;
  int cols = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string row;
    for (char ch : line) {
      if (ch == '0' || ch == '1') {
        row.push_back(ch);
      } else if (!std::isspace(static_cast<unsigned char>(ch))) {
        throw std::invalid_argument("mask text: unexpected character '" +
                                    std::string(1, ch) + "'");
      }
    }
    if (row.empty()) continue;
    if (cols < 0) cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("mask text: ragged rows");
    }
    for (char ch : row) cells.push_back(ch == '1' ? 1 : 0);
    ++rows;
  }
  return MaskMatrix(rows, std::max(cols, 0), std::move(cells));
}

MaskMatrix MaskMatrix::filled(int rows, int cols, bool value) {
  return MaskMatrix(
      rows, cols,
      std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols,
                                value ? 1 : 0));
}

std::int64_t MaskMatrix::count() const {
  return std::count(cells_.begin(), cells_.end(), std::uint8_t{1});
}

std::string MaskMatrix::to_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(rows_) * (cols_ + 1));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out.push_back(valid(r, c) ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

ValidIndex::ValidIndex(const MaskMatrix& mask) : mask_(mask) {
  reverse_.assign(static_cast<std::size_t>(mask.rows()) * mask.cols(), -1);
  for (int r = 0; r < mask.rows(); ++r) {
    for (int c = 0; c < mask.cols(); ++c) {
      if (!mask.valid(r, c)) continue;
      reverse_[static_cast<std::size_t>(r) * mask.cols() + c] =
          static_cast<std::int64_t>(coords_.size());
      coords_.push_back({r, c});
    }
  }
  if (coords_.empty()) throw EmptyMask();
}

std::optional<std::int64_t> ValidIndex::index_of(PixelCoord p) const {
  if (!mask_.contains(p.row, p.col)) return std::nullopt;
  const auto i = reverse_[static_cast<std::size_t>(p.row) * mask_.cols() + p.col];
  if (i < 0) return std::nullopt;
  return i;
}

ValidIndex build_valid_index(const MaskMatrix& mask) { return ValidIndex(mask); }

ParamBounds ParamBounds::for_index(const ValidIndex& index, Range angle) {
  ParamBounds b;
  b.position = {0.0, static_cast<double>(index.size() - 1)};
  b.angle = angle;
  b.validate();
  return b;
}

void ParamBounds::validate() const {
  if (!(position.lower <= position.upper) || !(angle.lower <= angle.upper)) {
    throw std::invalid_argument("ParamBounds: lower bound exceeds upper bound");
  }
}

namespace {

double clamp_finite(double v, const Range& r) {
  if (std::isnan(v)) return r.lower;
  return std::clamp(v, r.lower, r.upper);
}

}  // namespace

ParamVector clip(const RealParams& v, const ParamBounds& bounds) {
  // Position bounds are integral, so clamping before rounding gives the same
  // result as rounding first and avoids overflow in llround.
  const double pos = std::round(clamp_finite(v.position, bounds.position));
  return {static_cast<std::int64_t>(pos), clamp_finite(v.angle, bounds.angle)};
}

ParamVector clip(const ParamVector& v, const ParamBounds& bounds) {
  return clip(RealParams{static_cast<double>(v.position_index), v.angle},
              bounds);
}

PixelCoord direction_offset(Direction d) {
  switch (d) {
    case Direction::N:  return {-1, 0};
    case Direction::NE: return {-1, 1};
    case Direction::E:  return {0, 1};
    case Direction::SE: return {1, 1};
    case Direction::S:  return {1, 0};
    case Direction::SW: return {1, -1};
    case Direction::W:  return {0, -1};
    case Direction::NW: return {-1, -1};
  }
  throw std::invalid_argument("direction_offset: bad direction");
}

std::vector<Direction> neighbourhood(int r) {
  if (r == 8) {
    return {Direction::N, Direction::NE, Direction::E, Direction::SE,
            Direction::S, Direction::SW, Direction::W, Direction::NW};
  }
  if (r == 4) return {Direction::N, Direction::E, Direction::S, Direction::W};
  throw std::invalid_argument("neighbourhood: r must be 4 or 8");
}

void VisitedSet::insert(std::int64_t index) {
  if (index < 0) return;
  if (index >= static_cast<std::int64_t>(seen_.size())) seen_.resize(index + 1, false);
  if (!seen_[index]) {
    seen_[index] = true;
    ++count_;
  }
}

ParamVector neighbor(const ParamVector& v, Direction direction, int step,
                     const ValidIndex& index, const VisitedSet& visited) {
  if (step < 1) throw std::invalid_argument("neighbor: step must be >= 1");
  const PixelCoord center = index.coord(v.position_index);
  const PixelCoord offset = direction_offset(direction);

  std::int64_t l = step;
  for (int attempt = 0; attempt <= kMaxStepDoublings; ++attempt, l *= 2) {
    const std::int64_t row = center.row + offset.row * l;
    const std::int64_t col = center.col + offset.col * l;
    if (row < 0 || col < 0 || row >= index.mask().rows() ||
        col >= index.mask().cols()) {
      continue;
    }
    const auto target = index.index_of({static_cast<int>(row), static_cast<int>(col)});
    if (!target || visited.contains(*target)) continue;
    return {*target, v.angle};
  }
  throw NoValidNeighbor("no valid neighbour from (" + std::to_string(center.row) +
                        ", " + std::to_string(center.col) + ")");
}

ParamVector sample_uniform(RandomSource& rng, const ParamBounds& bounds) {
  const auto lo = static_cast<std::int64_t>(std::ceil(bounds.position.lower));
  const auto hi = static_cast<std::int64_t>(std::floor(bounds.position.upper));
  ParamVector v;
  v.position_index = rng.uniform_int(lo, hi);
  v.angle = rng.uniform_real(bounds.angle.lower, bounds.angle.upper);
  return v;
}

}  // namespace advsticker
