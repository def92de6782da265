// src/graphs.cpp

#include "lfmmi/graphs.hpp"

#include <map>
#include <utility>

namespace lfmmi {

std::vector<int> ctc_collapse(std::span<const int> labels) {
  std::vector<int> out;
  int prev = -1;
  for (int l : labels) {
    if (l != prev && l != 0) out.push_back(l);
    prev = l;
  }
  return out;
}

// Context states are (acceptor state, last emitted unit), last = 0 meaning
// blank. From (s, l): a blank arc to (s, 0); for every acceptor arc
// s --p/w--> d with p != l, an entry arc to (d, p); and when l != 0 a
// zero-weight repeat self-loop. Entering the same phone again without an
// intervening blank is blocked, which is exactly the repeat-removal rule.
Fsa expand_ctc(const Fsa& phone_acceptor, int num_units) {
  if (num_units < 2)
    throw std::invalid_argument("expand_ctc: need blank plus at least one phone");
  phone_acceptor.validate(num_units);
  for (const Arc& a : phone_acceptor.arcs) {
    if (a.label == 0)
      throw std::invalid_argument("expand_ctc: phone acceptor may not use blank labels");
  }

  std::vector<std::vector<const Arc*>> out_arcs(phone_acceptor.num_states);
  for (const Arc& a : phone_acceptor.arcs) out_arcs[a.src].push_back(&a);

  using Context = std::pair<uint32_t, uint32_t>;  // (state, last unit)
  std::map<Context, uint32_t> ids;
  std::vector<Context> order;
  auto intern = [&](Context c) {
    auto [it, inserted] = ids.emplace(c, static_cast<uint32_t>(order.size()));
    if (inserted) order.push_back(c);
    return it->second;
  };

  Fsa expanded;
  intern({phone_acceptor.start_state, 0});
  // Arcs are emitted grouped by source, in discovery order of the sources.
  for (size_t i = 0; i < order.size(); ++i) {
    auto [s, last] = order[i];
    uint32_t src = static_cast<uint32_t>(i);
    if (last != 0) expanded.add_arc(src, src, last, 0.0);
    expanded.add_arc(src, intern({s, 0}), 0, 0.0);
    for (const Arc* a : out_arcs[s]) {
      if (a->label == last) continue;
      expanded.add_arc(src, intern({a->dst, a->label}), a->label, a->weight);
    }
  }
  expanded.num_states = static_cast<uint32_t>(order.size());
  expanded.start_state = 0;
  expanded.final_weights.assign(expanded.num_states, kLogZero);
  for (size_t i = 0; i < order.size(); ++i) {
    expanded.final_weights[i] = phone_acceptor.final_weights[order[i].first];
  }
  expanded.validate(num_units);
  return expanded;
}

Fsa build_ctc_topology(int num_units) {
  if (num_units < 2)
    throw std::invalid_argument("ctc topology: need blank plus at least one phone");
  Fsa universal;
  uint32_t s = universal.add_state();
  universal.set_final(s, 0.0);
  for (int p = 1; p < num_units; ++p) universal.add_arc(s, s, static_cast<uint32_t>(p), 0.0);
  return expand_ctc(universal, num_units);
}

Fsa numerator_phone_acceptor(std::span<const int> token_ids, const Lexicon& lex) {
  std::vector<int> phones = lex.expand(token_ids);

  // Optional-silence boundaries: utterance start, end, and token joints.
  std::vector<char> boundary(phones.size() + 1, 0);
  boundary[0] = 1;
  size_t pos = 0;
  for (int id : token_ids) {
    pos += lex.pronunciations[id].size();
    boundary[pos] = 1;
  }
  boundary[phones.size()] = 1;

  const bool use_sil = lex.has_silence() && lex.silence_prob > 0.0;
  const double take_sil = std::log(lex.silence_prob);
  const double skip_sil = std::log(1.0 - lex.silence_prob);

  Fsa a;
  for (size_t i = 0; i <= phones.size(); ++i) a.add_state();
  // Silence detour states, numbered after the chain in boundary order.
  std::vector<uint32_t> sil_state(phones.size() + 1, 0);
  if (use_sil) {
    for (size_t i = 0; i <= phones.size(); ++i) {
      if (boundary[i]) sil_state[i] = a.add_state();
    }
  }

  auto boundary_weight = [&](size_t i) {
    return (use_sil && boundary[i]) ? skip_sil : 0.0;
  };

  for (size_t i = 0; i < phones.size(); ++i) {
    double w = boundary_weight(i);
    if (w != kLogZero)
      a.add_arc(static_cast<uint32_t>(i), static_cast<uint32_t>(i + 1),
                static_cast<uint32_t>(phones[i]), w);
    if (use_sil && boundary[i]) {
      a.add_arc(static_cast<uint32_t>(i), sil_state[i],
                static_cast<uint32_t>(lex.silence_phone), take_sil);
      a.add_arc(sil_state[i], static_cast<uint32_t>(i + 1),
                static_cast<uint32_t>(phones[i]), 0.0);
    }
  }
  double end_skip = boundary_weight(phones.size());
  if (end_skip != kLogZero) a.set_final(static_cast<uint32_t>(phones.size()), end_skip);
  if (use_sil) {
    a.add_arc(static_cast<uint32_t>(phones.size()), sil_state[phones.size()],
              static_cast<uint32_t>(lex.silence_phone), take_sil);
    a.set_final(sil_state[phones.size()], 0.0);
  }
  a.validate(lex.num_units());
  return a;
}

Fsa build_numerator_graph(std::span<const int> token_ids, const Lexicon& lex) {
  return expand_ctc(numerator_phone_acceptor(token_ids, lex), lex.num_units());
}

Fsa denominator_phone_acceptor(const BigramLm& lm, int num_units) {
  if (lm.num_units != num_units)
    throw std::invalid_argument("denominator: bigram covers " +
                                std::to_string(lm.num_units - 1) + " phones, need " +
                                std::to_string(num_units - 1));
  lm.validate();

  // State 0 is the sentence-initial context; state p the context of phone p.
  Fsa a;
  a.add_state();
  a.set_final(0, 0.0);
  for (int p = 1; p < num_units; ++p) {
    uint32_t s = a.add_state();
    a.set_final(s, 0.0);
  }
  for (int p = 1; p < num_units; ++p)
    a.add_arc(0, static_cast<uint32_t>(p), static_cast<uint32_t>(p),
              lm.initial_log_prob(p));
  for (int prev = 1; prev < num_units; ++prev) {
    for (int next = 1; next < num_units; ++next)
      a.add_arc(static_cast<uint32_t>(prev), static_cast<uint32_t>(next),
                static_cast<uint32_t>(next), lm.log_prob(prev, next));
  }
  a.validate(num_units);
  return a;
}

Fsa build_denominator_graph(const BigramLm& lm, int num_units) {
  return expand_ctc(denominator_phone_acceptor(lm, num_units), num_units);
}

}  // namespace lfmmi
