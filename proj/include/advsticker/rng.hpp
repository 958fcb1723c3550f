#ifndef ADVSTICKER_RNG_HPP
#define ADVSTICKER_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace advsticker {

// Source of the random draws consumed by an attack run. The optimizer only
// talks to this interface so tests can script exact draw sequences.
class RandomSource {
 public:
  virtual ~RandomSource() = default;

  // Uniform integer in [lo, hi].
  virtual std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) = 0;
  // Uniform real in [lo, hi); returns lo when lo == hi.
  virtual double uniform_real(double lo, double hi) = 0;
};

class SeededRng final : public RandomSource {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) override;
  double uniform_real(double lo, double hi) override;

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit mix of a base seed and a tag (FNV-1a then splitmix64).
// Unlike std::hash the result is identical on every platform.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

}  // namespace advsticker

#endif  // ADVSTICKER_RNG_HPP
