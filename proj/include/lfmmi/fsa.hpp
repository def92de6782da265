// include/lfmmi/fsa.hpp
//
// Weighted finite-state acceptor over phone units. Epsilon-free: every arc
// carries a unit id in [0, P), with blank reserved as unit 0. Weights are
// log-probabilities; final weights default to kLogZero (non-final).

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lfmmi/common.hpp"

namespace lfmmi {

struct Arc {
  uint32_t src = 0;
  uint32_t dst = 0;
  uint32_t label = 0;
  double weight = 0.0;

  friend bool operator==(const Arc&, const Arc&) = default;
};

struct Fsa {
  uint32_t num_states = 0;
  uint32_t start_state = 0;
  std::vector<Arc> arcs;
  // Dense, size num_states; kLogZero marks a non-final state.
  std::vector<double> final_weights;

  bool is_final(uint32_t s) const { return final_weights[s] != kLogZero; }

  uint32_t add_state() {
    final_weights.push_back(kLogZero);
    return num_states++;
  }
  void add_arc(uint32_t src, uint32_t dst, uint32_t label, double weight) {
    arcs.push_back(Arc{src, dst, label, weight});
  }
  void set_final(uint32_t s, double weight) { final_weights[s] = weight; }

  // Checks the structural invariants: arc endpoints and start in range, no
  // NaN weights, labels < num_units when num_units >= 0, and at least one
  // final state reachable from the start. Throws std::invalid_argument.
  void validate(int num_units = -1) const;

  // Structural equality, bitwise on weights.
  friend bool operator==(const Fsa&, const Fsa&) = default;
};

// Binary serialization, little-endian:
//   magic "LFSA", version u32, num_states u32, num_arcs u64,
//   arcs as (u32 src, u32 dst, u32 label, f64 weight),
//   then (u32 state, f64 weight) final pairs until EOF.
// The format carries no start state; serialized FSAs must use start state 0
// (all compiled graphs do). Round-trips are bit-exact.
void save_fsa(const Fsa& fsa, std::ostream& os);
void save_fsa(const Fsa& fsa, const std::string& path);
Fsa load_fsa(std::istream& is);
Fsa load_fsa(const std::string& path);

}  // namespace lfmmi
