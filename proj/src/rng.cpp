#include "advsticker/rng.hpp"

#include <stdexcept>

namespace advsticker {

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  if (lo == hi) return lo;
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
}

double SeededRng::uniform_real(double lo, double hi) {
  if (hi < lo) throw std::invalid_argument("uniform_real: empty range");
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(base >> (8 * i)));
  for (char c : tag) mix_byte(static_cast<unsigned char>(c));

  // splitmix64 finalizer
  std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace advsticker
