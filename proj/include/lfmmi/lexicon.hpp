// include/lfmmi/lexicon.hpp
//
// Phone-level lexicon and the add-one-smoothed phone bigram LM that backs
// the denominator graph.

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lfmmi/common.hpp"

namespace lfmmi {

struct Lexicon {
  // Index = phone-unit id. phones[0] is the reserved blank "<blk>"; real
  // phones occupy ids 1..P-1 in header order.
  std::vector<std::string> phones;
  std::vector<std::string> tokens;
  std::vector<std::vector<int>> pronunciations;  // per token id, phone ids
  int silence_phone = 0;                         // 0 = no silence phone
  double silence_prob = 0.5;

  int num_units() const { return static_cast<int>(phones.size()); }
  int num_tokens() const { return static_cast<int>(tokens.size()); }
  bool has_silence() const { return silence_phone != 0; }

  // -1 when absent.
  int token_id(const std::string& token) const;
  int phone_id(const std::string& phone) const;

  // Concatenated pronunciation phones, no silence inserted.
  // Throws std::invalid_argument naming the first out-of-range token.
  std::vector<int> expand(std::span<const int> token_ids) const;

  friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

// Text format: header line `phones: <space-separated phone symbols>` then
// `token phone...` lines; UTF-8. Blank is implicit unit 0. The phone named
// silence_symbol (if declared) becomes the optional-silence phone.
// Errors carry 1-based line numbers.
Lexicon compile_lexicon(const std::string& text,
                        const std::string& silence_symbol = "sil",
                        double silence_prob = 0.5);

// Binary serialization (magic "LLEX"). Bit-exact round-trip.
void save_lexicon(const Lexicon& lex, std::ostream& os);
void save_lexicon(const Lexicon& lex, const std::string& path);
Lexicon load_lexicon(std::istream& is);
Lexicon load_lexicon(const std::string& path);

struct BigramLm {
  static constexpr int kOrder = 2;

  int num_units = 0;  // P including blank; rows cover real phones 1..P-1
  // Sentence-initial row: add-one-smoothed unigram over all phone
  // occurrences. initial[0] is kLogZero (blank never appears).
  std::vector<double> initial;
  // transitions[prev * num_units + next]; rows/columns 0 are kLogZero.
  std::vector<double> transitions;

  double initial_log_prob(int phone) const { return initial[phone]; }
  double log_prob(int prev, int next) const {
    return transitions[static_cast<size_t>(prev) * num_units + next];
  }

  // Every context row must sum to 1 within tol in the linear domain.
  void validate(double tol = 1e-6) const;

  friend bool operator==(const BigramLm&, const BigramLm&) = default;
};

// Add-one-smoothed bigram over the lexicon expansions of the transcripts.
// Silence is excluded from counting. Throws on an empty corpus.
BigramLm estimate_phone_bigram(const std::vector<std::vector<int>>& token_transcripts,
                               const Lexicon& lex);

// JSON serialization (bigram.json artifact). Deterministic output.
std::string bigram_to_json(const BigramLm& lm, const Lexicon& lex);
BigramLm bigram_from_json(const std::string& json_text);

}  // namespace lfmmi
