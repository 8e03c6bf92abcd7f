#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nprnn {

// Caller broke a precondition: bad shape, out-of-range argument, malformed input.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A forward pass produced a NaN/Inf. `timestep` is the first offending step (1-based).
class NumericOverflow : public std::runtime_error {
 public:
  NumericOverflow(const std::string& what, std::size_t timestep)
      : std::runtime_error(what), timestep_(timestep) {}
  std::size_t timestep() const noexcept { return timestep_; }

 private:
  std::size_t timestep_;
};

// An iterative solver ran out of iterations. Carries its best estimate so far.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

// Malformed file. `offset` is the byte (or line) position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace nprnn
