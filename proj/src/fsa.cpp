// src/fsa.cpp

#include "lfmmi/fsa.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <queue>
#include <sstream>

namespace lfmmi {

namespace {

constexpr char kMagic[4] = {'L', 'F', 'S', 'A'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ParseError("fsa: truncated input");
  return value;
}

}  // namespace

void Fsa::validate(int num_units) const {
  if (final_weights.size() != num_states)
    throw std::invalid_argument("fsa: final_weights size mismatch");
  if (num_states == 0) throw std::invalid_argument("fsa: no states");
  if (start_state >= num_states)
    throw std::invalid_argument("fsa: start state out of range");
  for (const Arc& a : arcs) {
    if (a.src >= num_states || a.dst >= num_states)
      throw std::invalid_argument("fsa: arc endpoint out of range");
    if (num_units >= 0 && a.label >= static_cast<uint32_t>(num_units))
      throw std::invalid_argument("fsa: arc label out of range");
    if (std::isnan(a.weight)) throw std::invalid_argument("fsa: NaN arc weight");
    if (a.weight == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("fsa: +inf arc weight");
  }
  for (double w : final_weights) {
    if (std::isnan(w)) throw std::invalid_argument("fsa: NaN final weight");
  }

  // At least one final state reachable from the start.
  std::vector<char> seen(num_states, 0);
  std::queue<uint32_t> frontier;
  frontier.push(start_state);
  seen[start_state] = 1;
  std::vector<std::vector<uint32_t>> out(num_states);
  for (const Arc& a : arcs) out[a.src].push_back(a.dst);
  while (!frontier.empty()) {
    uint32_t s = frontier.front();
    frontier.pop();
    if (is_final(s)) return;
    for (uint32_t d : out[s]) {
      if (!seen[d]) {
        seen[d] = 1;
        frontier.push(d);
      }
    }
  }
  throw std::invalid_argument("fsa: no final state reachable from start");
}

void save_fsa(const Fsa& fsa, std::ostream& os) {
  if (fsa.start_state != 0)
    throw std::invalid_argument("fsa: serialized FSAs must have start state 0");
  if (fsa.final_weights.size() != fsa.num_states)
    throw std::invalid_argument("fsa: final_weights size mismatch");
  os.write(kMagic, 4);
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint32_t>(os, fsa.num_states);
  write_pod<uint64_t>(os, fsa.arcs.size());
  for (const Arc& a : fsa.arcs) {
    write_pod<uint32_t>(os, a.src);
    write_pod<uint32_t>(os, a.dst);
    write_pod<uint32_t>(os, a.label);
    write_pod<double>(os, a.weight);
  }
  for (uint32_t s = 0; s < fsa.num_states; ++s) {
    if (fsa.final_weights[s] != kLogZero) {
      write_pod<uint32_t>(os, s);
      write_pod<double>(os, fsa.final_weights[s]);
    }
  }
}

void save_fsa(const Fsa& fsa, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("fsa: cannot open " + path + " for writing");
  save_fsa(fsa, os);
  if (!os) throw ParseError("fsa: write failed for " + path);
}

Fsa load_fsa(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("fsa: bad magic, not an LFSA file");
  uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw ParseError("fsa: unknown format version " + std::to_string(version));

  Fsa fsa;
  fsa.num_states = read_pod<uint32_t>(is);
  fsa.start_state = 0;
  uint64_t num_arcs = read_pod<uint64_t>(is);
  fsa.arcs.reserve(num_arcs);
  for (uint64_t i = 0; i < num_arcs; ++i) {
    Arc a;
    a.src = read_pod<uint32_t>(is);
    a.dst = read_pod<uint32_t>(is);
    a.label = read_pod<uint32_t>(is);
    a.weight = read_pod<double>(is);
    fsa.arcs.push_back(a);
  }
  fsa.final_weights.assign(fsa.num_states, kLogZero);
  // Final pairs run to EOF.
  while (true) {
    uint32_t s;
    is.read(reinterpret_cast<char*>(&s), sizeof(s));
    if (is.gcount() == 0) break;
    if (is.gcount() != sizeof(s)) throw ParseError("fsa: truncated final pair");
    double w = read_pod<double>(is);
    if (s >= fsa.num_states) throw ParseError("fsa: final state out of range");
    fsa.final_weights[s] = w;
  }
  fsa.validate();
  return fsa;
}

Fsa load_fsa(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("fsa: cannot open " + path);
  return load_fsa(is);
}

}  // namespace lfmmi
