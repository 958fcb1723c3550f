#ifndef ADVSTICKER_ERRORS_HPP
#define ADVSTICKER_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace advsticker {

struct EmptyMask : std::runtime_error {
  EmptyMask() : std::runtime_error("mask has no valid cell") {}
};

struct NoValidNeighbor : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateSurface : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transport or protocol failure talking to a remote oracle.
struct RemoteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace advsticker

#endif  // ADVSTICKER_ERRORS_HPP
