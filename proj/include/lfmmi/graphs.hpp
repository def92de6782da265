// include/lfmmi/graphs.hpp
//
// Compilation of lexicons, CTC topology, per-utterance numerator graphs and
// the shared phone-bigram denominator graph into epsilon-free FSAs.
//
// All constructions are deterministic: identical inputs produce structurally
// identical FSAs (same states, same arcs in the same order), and every
// compiled graph has start state 0.

#pragma once

#include <span>

#include "lfmmi/fsa.hpp"
#include "lfmmi/lexicon.hpp"

namespace lfmmi {

// Expands a phone-level acceptor (labels in [1, num_units), no blanks) into
// the frame-level FSA accepting exactly the label paths whose CTC collapse
// (repeat-removal then blank-removal) is a phone sequence the acceptor
// accepts, with the same weight. Repeats ride zero-weight self-loops; blank
// loops separate phones; a repeated phone requires an intervening blank.
Fsa expand_ctc(const Fsa& phone_acceptor, int num_units);

// CTC topology over all num_units units: the expansion of the universal
// single-state acceptor. All weights 0. Requires num_units >= 2.
Fsa build_ctc_topology(int num_units);

// Linear phone acceptor for the concatenated pronunciation of the token
// sequence, with optional silence (weight log silence_prob taken /
// log(1 - silence_prob) skipped) at the utterance boundaries and between
// tokens, expanded by the CTC topology. The empty sequence yields the
// blank/optional-silence-only graph.
Fsa build_numerator_graph(std::span<const int> token_ids, const Lexicon& lex);

// Phone-bigram acceptor (one context state per real phone plus the start
// state, every state final with weight 0) expanded by the CTC topology.
// Utterance-independent; built once and shared.
Fsa build_denominator_graph(const BigramLm& lm, int num_units);

// The phone-level acceptors before CTC expansion, exposed for tests.
Fsa numerator_phone_acceptor(std::span<const int> token_ids, const Lexicon& lex);
Fsa denominator_phone_acceptor(const BigramLm& lm, int num_units);

// CTC collapse of a frame-level label path: remove consecutive repeats, then
// remove blanks (unit 0).
std::vector<int> ctc_collapse(std::span<const int> labels);

}  // namespace lfmmi
