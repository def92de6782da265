// src/emission.cpp

#include "lfmmi/emission.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace lfmmi {

namespace {

constexpr char kMagic[4] = {'L', 'E', 'M', 'I'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ParseError("emissions: truncated input");
  return value;
}

}  // namespace

EmissionMatrix::EmissionMatrix(int frames, int units, double fill)
    : frames_(frames), units_(units),
      values_(static_cast<size_t>(frames) * units, fill) {
  if (frames < 0 || units < 0)
    throw std::invalid_argument("emissions: negative dimensions");
}

EmissionMatrix::EmissionMatrix(int frames, int units, std::vector<double> values)
    : frames_(frames), units_(units), values_(std::move(values)) {
  if (frames < 0 || units < 0)
    throw std::invalid_argument("emissions: negative dimensions");
  if (values_.size() != static_cast<size_t>(frames) * units)
    throw std::invalid_argument("emissions: value count does not match T*P");
}

EmissionMatrix EmissionMatrix::truncated(int frames) const {
  if (frames < 0 || frames > frames_)
    throw std::invalid_argument("emissions: bad truncation length");
  std::vector<double> head(values_.begin(),
                           values_.begin() + static_cast<size_t>(frames) * units_);
  return EmissionMatrix(frames, units_, std::move(head));
}

EmissionMatrix EmissionMatrix::scaled(double acoustic_scale) const {
  std::vector<double> scaled(values_.size());
  for (size_t i = 0; i < values_.size(); ++i) {
    scaled[i] = acoustic_scale == 0.0 ? 0.0 : acoustic_scale * values_[i];
  }
  return EmissionMatrix(frames_, units_, std::move(scaled));
}

void EmissionMatrix::check_normalized(double tol) const {
  for (int t = 0; t < frames_; ++t) {
    double lse = kLogZero;
    for (int p = 0; p < units_; ++p) lse = log_add(lse, at(t, p));
    if (std::isnan(lse) || std::abs(lse) > tol) {
      std::ostringstream msg;
      msg << "emissions: frame " << t << " is not log-normalized (logsumexp = "
          << lse << ")";
      throw ParseError(msg.str());
    }
  }
}

void EmissionMatrix::check_finite_or_log_zero() const {
  for (double v : values_) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("emissions: entries must be finite or -inf");
  }
}

void save_emissions(const EmissionMatrix& e, std::ostream& os) {
  os.write(kMagic, 4);
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint32_t>(os, static_cast<uint32_t>(e.frames()));
  write_pod<uint32_t>(os, static_cast<uint32_t>(e.units()));
  for (double v : e.values()) write_pod<float>(os, static_cast<float>(v));
}

void save_emissions(const EmissionMatrix& e, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("emissions: cannot open " + path + " for writing");
  save_emissions(e, os);
  if (!os) throw ParseError("emissions: write failed for " + path);
}

EmissionMatrix load_emissions(std::istream& is, bool check_normalized) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("emissions: bad magic, not an LEMI file");
  uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw ParseError("emissions: unknown format version " + std::to_string(version));
  uint32_t frames = read_pod<uint32_t>(is);
  uint32_t units = read_pod<uint32_t>(is);
  std::vector<double> values(static_cast<size_t>(frames) * units);
  for (double& v : values) v = read_pod<float>(is);
  EmissionMatrix e(static_cast<int>(frames), static_cast<int>(units),
                   std::move(values));
  e.check_finite_or_log_zero();
  if (check_normalized) e.check_normalized();
  return e;
}

EmissionMatrix load_emissions(const std::string& path, bool check_normalized) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("emissions: cannot open " + path);
  return load_emissions(is, check_normalized);
}

}  // namespace lfmmi
