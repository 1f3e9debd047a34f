#pragma once

#include <stdexcept>
#include <string>

namespace fbvar {

// Bad arguments: order outside nu > -1, points outside (0,1), malformed specs.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// An iterative method failed to converge. `bracket_lo`/`bracket_hi` describe
// the last interval searched when that makes sense.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double lo = 0.0, double hi = 0.0)
      : std::runtime_error(what), bracket_lo(lo), bracket_hi(hi) {}
  double bracket_lo;
  double bracket_hi;
};

// A truncated eigenfunction expansion cannot certify the requested value
// (time too small for the number of modes, grid too coarse, ...).
class ResolutionError : public std::runtime_error {
 public:
  ResolutionError(const std::string& what, double bound)
      : std::runtime_error(what), tail_bound(bound) {}
  double tail_bound;
};

// Invalid experiment configuration (CLI / JSON).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace fbvar
