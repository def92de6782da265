// include/lfmmi/common.hpp
//
// Shared numeric primitives and error types for the lfmmi library.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lfmmi {

// Additive identity of the log semiring. (-inf) + finite = -inf, never NaN.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)) with max-shift for stability.
inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

// Input file / text that does not parse. CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Objective undefined: a graph admits no path on the given emissions.
// CLI maps this to exit code 3.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(std::string side, const std::string& what)
      : std::runtime_error(what), side_(std::move(side)) {}
  // "numerator", "denominator", or "graph" when the caller has no split.
  const std::string& side() const { return side_; }

 private:
  std::string side_;
};

}  // namespace lfmmi
