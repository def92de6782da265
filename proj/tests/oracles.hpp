// tests/oracles.hpp
//
// Independent brute-force oracles and random instance generators. The
// enumeration oracles accumulate path probabilities in the linear domain
// with long doubles, deliberately avoiding the library's log-semiring code.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "lfmmi/emission.hpp"
#include "lfmmi/fsa.hpp"
#include "lfmmi/lexicon.hpp"

namespace oracles {

// logsumexp over all accepted length-T label paths of
// (arc weights + emissions + final weight), by explicit path enumeration.
inline double enumerate_forward(const lfmmi::Fsa& g, const lfmmi::EmissionMatrix& e) {
  long double total = 0.0L;
  std::function<void(uint32_t, int, double)> rec = [&](uint32_t s, int t, double w) {
    if (t == e.frames()) {
      if (g.final_weights[s] != lfmmi::kLogZero)
        total += std::exp(static_cast<long double>(w + g.final_weights[s]));
      return;
    }
    for (const lfmmi::Arc& a : g.arcs) {
      if (a.src != s) continue;
      rec(a.dst, t + 1, w + a.weight + e.at(t, static_cast<int>(a.label)));
    }
  };
  rec(g.start_state, 0, 0.0);
  return total == 0.0L ? lfmmi::kLogZero : static_cast<double>(std::log(total));
}

// All length-T label paths accepted by g, with their summed probability.
// Returns pairs (label path, linear-domain probability mass).
inline std::vector<std::pair<std::vector<int>, long double>> enumerate_label_paths(
    const lfmmi::Fsa& g, const lfmmi::EmissionMatrix& e) {
  std::vector<std::pair<std::vector<int>, long double>> out;
  std::vector<int> labels;
  std::function<void(uint32_t, int, double)> rec = [&](uint32_t s, int t, double w) {
    if (t == e.frames()) {
      if (g.final_weights[s] == lfmmi::kLogZero) return;
      long double mass = std::exp(static_cast<long double>(w + g.final_weights[s]));
      for (auto& [path, m] : out) {
        if (path == labels) {
          m += mass;
          return;
        }
      }
      out.emplace_back(labels, mass);
      return;
    }
    for (const lfmmi::Arc& a : g.arcs) {
      if (a.src != s) continue;
      labels.push_back(static_cast<int>(a.label));
      rec(a.dst, t + 1, w + a.weight + e.at(t, static_cast<int>(a.label)));
      labels.pop_back();
    }
  };
  rec(g.start_state, 0, 0.0);
  return out;
}

// Repeat-removal then blank-removal, written out directly.
inline std::vector<int> collapse(const std::vector<int>& labels) {
  std::vector<int> no_repeat;
  for (int l : labels) {
    if (no_repeat.empty() || no_repeat.back() != l) no_repeat.push_back(l);
  }
  std::vector<int> out;
  for (int l : no_repeat) {
    if (l != 0) out.push_back(l);
  }
  return out;
}

// Whether the FSA accepts the label path (some matching state path ends in a
// final state), ignoring weights.
inline bool accepts(const lfmmi::Fsa& g, const std::vector<int>& labels) {
  std::function<bool(uint32_t, size_t)> rec = [&](uint32_t s, size_t i) {
    if (i == labels.size()) return g.final_weights[s] != lfmmi::kLogZero;
    for (const lfmmi::Arc& a : g.arcs) {
      if (a.src == s && static_cast<int>(a.label) == labels[i] && rec(a.dst, i + 1))
        return true;
    }
    return false;
  };
  return rec(g.start_state, 0);
}

// Every phone sequence reachable from the token sequence with optional
// silence at the utterance boundaries and between tokens.
inline std::vector<std::vector<int>> expansions_with_optional_silence(
    const std::vector<int>& token_ids, const lfmmi::Lexicon& lex) {
  std::vector<std::vector<int>> results;
  size_t boundaries = token_ids.size() + 1;
  if (!lex.has_silence() || lex.silence_prob <= 0.0) {
    std::vector<int> flat;
    for (int id : token_ids) {
      const auto& pron = lex.pronunciations[id];
      flat.insert(flat.end(), pron.begin(), pron.end());
    }
    return {flat};
  }
  for (uint32_t mask = 0; mask < (1u << boundaries); ++mask) {
    std::vector<int> seq;
    for (size_t b = 0; b <= token_ids.size(); ++b) {
      if (mask & (1u << b)) seq.push_back(lex.silence_phone);
      if (b < token_ids.size()) {
        const auto& pron = lex.pronunciations[token_ids[b]];
        seq.insert(seq.end(), pron.begin(), pron.end());
      }
    }
    if (std::find(results.begin(), results.end(), seq) == results.end())
      results.push_back(seq);
  }
  return results;
}

inline lfmmi::Fsa random_fsa(std::mt19937& rng, int max_states = 4, int num_units = 3) {
  std::uniform_int_distribution<int> state_count(1, max_states);
  std::uniform_real_distribution<double> weight(-2.0, 0.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  lfmmi::Fsa g;
  int n = state_count(rng);
  for (int i = 0; i < n; ++i) g.add_state();
  std::uniform_int_distribution<int> state(0, n - 1);
  std::uniform_int_distribution<int> label(0, num_units - 1);
  std::uniform_int_distribution<int> arc_count(1, 2 * n + 2);
  int arcs = arc_count(rng);
  for (int i = 0; i < arcs; ++i) {
    g.add_arc(static_cast<uint32_t>(state(rng)), static_cast<uint32_t>(state(rng)),
              static_cast<uint32_t>(label(rng)), weight(rng));
  }
  bool any_final = false;
  for (int i = 0; i < n; ++i) {
    if (coin(rng) < 0.5) {
      g.set_final(static_cast<uint32_t>(i), weight(rng));
      any_final = true;
    }
  }
  if (!any_final) g.set_final(static_cast<uint32_t>(state(rng)), weight(rng));
  return g;
}

inline lfmmi::EmissionMatrix random_emissions(std::mt19937& rng, int frames, int units,
                                              bool normalized = false) {
  std::uniform_real_distribution<double> value(-3.0, 0.0);
  lfmmi::EmissionMatrix e(frames, units);
  for (int t = 0; t < frames; ++t) {
    for (int p = 0; p < units; ++p) e.at(t, p) = value(rng);
    if (normalized) {
      double lse = lfmmi::kLogZero;
      for (int p = 0; p < units; ++p) lse = lfmmi::log_add(lse, e.at(t, p));
      for (int p = 0; p < units; ++p) e.at(t, p) -= lse;
    }
  }
  return e;
}

}  // namespace oracles
