// include/lfmmi/decoders.hpp
//
// Beam search for AED (label-synchronous) and NT (frame-synchronous, ALSD
// style) decoding with pluggable score providers, hypothesis combination,
// LF-MMI N-best rescoring, edit distance, and the approximated MBR risk.

#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lfmmi/alignment_score.hpp"
#include "lfmmi/emission.hpp"
#include "lfmmi/nbest.hpp"
#include "lfmmi/prefix_score.hpp"

namespace lfmmi {

// Ordered token set plus the reserved symbols. Real tokens get ids 0..V-1;
// <sos>, <eos> and <blk> live past them and are distinct from all tokens.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int sos() const { return size(); }
  int eos() const { return size() + 1; }
  int blank() const { return size() + 2; }
  int extended_size() const { return size() + 3; }

  const std::string& name(int id) const;
  int find(const std::string& token) const;  // -1 when absent

 private:
  std::vector<std::string> tokens_;
};

// Conditional next-token log-posterior source for AED decoding. Returns a
// vector of extended_size() entries covering the real tokens and <eos>
// (other slots kLogZero), normalized: logsumexp over entries = 0 within 1e-4.
class AedScoreProvider {
 public:
  virtual ~AedScoreProvider() = default;
  virtual std::vector<double> log_posteriors(const std::vector<int>& prefix) const = 0;
};

// Blank/token log-posterior source for NT decoding at alignment point
// (prefix, t), t being the number of frames consumed (0-based frame t is the
// next to consume). Covers the real tokens and <blk>; normalized as above.
class NtScoreProvider {
 public:
  virtual ~NtScoreProvider() = default;
  virtual std::vector<double> log_posteriors(const std::vector<int>& prefix,
                                             int t) const = 0;
};

// Table-driven provider with explicit conditional distributions, keyed by
// the space-joined prefix token names ("" for the empty prefix).
class TableAedProvider : public AedScoreProvider {
 public:
  TableAedProvider(const Vocabulary& vocab,
                   std::map<std::string, std::map<std::string, double>> table);
  static TableAedProvider from_json(const Vocabulary& vocab,
                                    const std::string& json_text);
  std::vector<double> log_posteriors(const std::vector<int>& prefix) const override;

 private:
  const Vocabulary* vocab_;
  std::map<std::string, std::vector<double>> rows_;
};

// Table-driven NT provider keyed by "<space-joined prefix>@<t>".
class TableNtProvider : public NtScoreProvider {
 public:
  TableNtProvider(const Vocabulary& vocab,
                  std::map<std::string, std::map<std::string, double>> table);
  static TableNtProvider from_json(const Vocabulary& vocab,
                                   const std::string& json_text);
  std::vector<double> log_posteriors(const std::vector<int>& prefix,
                                     int t) const override;

 private:
  const Vocabulary* vocab_;
  std::map<std::string, std::vector<double>> rows_;
};

// Emission-derived AED provider: next-token scores from CTC-style forward
// probabilities of the candidates' phone expansions (summed over frame
// cut-points), <eos> scored by the complete-sequence forward probability,
// log-softmax normalized. Stands in for an attention decoder or CTC prefix
// scorer in tests and the CLI.
class CtcPrefixAedProvider : public AedScoreProvider {
 public:
  CtcPrefixAedProvider(const Vocabulary& vocab, const Lexicon& lex,
                       const EmissionMatrix& e);
  std::vector<double> log_posteriors(const std::vector<int>& prefix) const override;

 private:
  const Vocabulary* vocab_;
  const Lexicon* lex_;
  const EmissionMatrix* e_;
  std::vector<int> token_map_;  // vocab token id -> lexicon token id
};

// Emission-derived NT provider: at (prefix, t), blank scores e[t][blank] and
// each token scores e[t][first pronunciation phone], log-softmax normalized.
class EmissionNtProvider : public NtScoreProvider {
 public:
  EmissionNtProvider(const Vocabulary& vocab, const Lexicon& lex,
                     const EmissionMatrix& e);
  std::vector<double> log_posteriors(const std::vector<int>& prefix,
                                     int t) const override;

 private:
  const Vocabulary* vocab_;
  const EmissionMatrix* e_;
  std::vector<int> first_phone_;  // vocab token id -> phone id
};

struct AedSearchConfig {
  double beta_att = 1.0;
  double beta_ctc = 0.0;
  double beta_mmi = 0.2;
  int beam = 10;
  int nbest = 0;    // 0 = beam
  int max_len = 0;  // hard cap on u; 0 = T (frame count)
};

// Label-synchronous beam search. Providers may be null; a null provider or a
// zero weight leaves no trace in scores or breakdowns, so beta_mmi = 0
// reproduces the baseline output byte-identically. At least one source must
// be active. The scorer, when used, maps tokens to phones via its lexicon.
NBestList aed_beam_search(const AedScoreProvider* att, const AedScoreProvider* ctc,
                          const PrefixScorer* mmi, const Vocabulary& vocab,
                          int frames, const AedSearchConfig& cfg,
                          const std::string& utt_id = "utt");

// Frame-synchronous hypothesis: tokens aligned to the first t frames. The
// transducer component is merged across alignment paths; the MMI component
// is the telescoped beta * (S_ali(W, t) - S_ali([], 0)) and never merged.
struct NtHypothesis {
  std::vector<int> tokens;
  int t = 0;
  double nt_score = 0.0;
  double mmi_score = 0.0;
  AlignmentScorer::EntryPtr mmi_entry;

  double total() const { return nt_score + mmi_score; }
};

// Merges hypotheses with identical (tokens, t): transducer components are
// logsumexp-combined, the MMI component and cache come from the group
// representative (first occurrence). Order of first occurrence is kept.
std::vector<NtHypothesis> combine_hypotheses(const std::vector<NtHypothesis>& hyps);

struct NtSearchConfig {
  double beta_mmi = 0.2;
  int beam = 10;
  int nbest = 0;  // 0 = beam
  int u_max = 0;  // maximum token count; 0 = T
};

// ALSD-style beam search: each step extends every active
// hypothesis by <blk> (t+1) and by each token (u+1 at fixed t), merges
// identical (tokens, t) groups, prunes to the beam. Hypotheses whose blank
// consumes the last frame reach t = T and finish. mmi may be null; a null
// scorer or beta_mmi = 0 reproduces the baseline byte-identically.
NBestList nt_beam_search(const NtScoreProvider& provider, const AlignmentScorer* mmi,
                         const Vocabulary& vocab, int frames,
                         const NtSearchConfig& cfg,
                         const std::string& utt_id = "utt");

// LF-MMI rescoring; the denominator is shared across an utterance's
// hypotheses and drops as a constant, so only numerator scores enter:
// total' = total + lambda * log P(O|G_num(W)). lambda = 0 returns the input
// unchanged. A hypothesis whose numerator admits no path (or with a token
// missing from the lexicon) gets a -inf term, sorts last and sets the
// warning flag. Re-sorted descending, stable.
NBestList lfmmi_rescore(const NBestList& nbest, const EmissionMatrix& e,
                        const Lexicon& lex, double lambda_mmi);

// The pure re-ranking step given precomputed per-hypothesis MMI terms;
// exposed so the rank-invariance-under-constant-shift property is testable.
NBestList apply_mmi_rescoring(const NBestList& nbest,
                              const std::vector<double>& mmi_terms,
                              double lambda_mmi);

// Levenshtein distance with unit insert/delete/substitute costs.
int edit_distance(std::span<const int> a, std::span<const int> b);
int edit_distance(std::span<const std::string> a, std::span<const std::string> b);

inline constexpr double kDefaultMbrEpsilon = 1e-10;

// Approximated Bayesian risk over an N-best list:
//   sum_i P_i * risk_i / (sum_i P_i + epsilon),
// with P_i = exp(log_posterior_i).
double approx_bayesian_risk(std::span<const std::pair<double, double>> posterior_risk,
                            double epsilon = kDefaultMbrEpsilon);
// Convenience: posteriors from entry totals, risks from edit distance
// against the reference token names.
double approx_bayesian_risk(const NBestList& nbest,
                            std::span<const std::string> reference,
                            double epsilon = kDefaultMbrEpsilon);

}  // namespace lfmmi
