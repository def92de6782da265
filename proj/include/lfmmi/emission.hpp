// include/lfmmi/emission.hpp
//
// T x P per-frame log-posteriors over phone units, the acoustic encoder's
// output surrogate. Stored as f64 in memory, f32 on disk.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lfmmi/common.hpp"

namespace lfmmi {

class EmissionMatrix {
 public:
  EmissionMatrix() = default;
  // All entries initialized to fill (default log 1 = 0).
  EmissionMatrix(int frames, int units, double fill = 0.0);
  EmissionMatrix(int frames, int units, std::vector<double> values);

  int frames() const { return frames_; }
  int units() const { return units_; }

  double at(int t, int p) const { return values_[static_cast<size_t>(t) * units_ + p]; }
  double& at(int t, int p) { return values_[static_cast<size_t>(t) * units_ + p]; }
  const std::vector<double>& values() const { return values_; }

  // First `frames` rows, same units.
  EmissionMatrix truncated(int frames) const;

  // Entry-wise acoustic scaling. Scale 0 ignores emissions entirely: every
  // entry becomes log 1 = 0, including -inf ones.
  EmissionMatrix scaled(double acoustic_scale) const;

  // Per-frame logsumexp over units must be 0 within tol. Throws ParseError.
  void check_normalized(double tol = 1e-4) const;

  // Rejects NaN entries. Throws std::invalid_argument.
  void check_finite_or_log_zero() const;

 private:
  int frames_ = 0;
  int units_ = 0;
  std::vector<double> values_;
};

// Binary serialization, little-endian:
//   magic "LEMI", version u32, T u32, P u32, row-major f32 values.
// The loader upcasts to f64 and validates per-frame normalization unless
// check_normalized is false.
void save_emissions(const EmissionMatrix& e, std::ostream& os);
void save_emissions(const EmissionMatrix& e, const std::string& path);
EmissionMatrix load_emissions(std::istream& is, bool check_normalized = true);
EmissionMatrix load_emissions(const std::string& path, bool check_normalized = true);

}  // namespace lfmmi
