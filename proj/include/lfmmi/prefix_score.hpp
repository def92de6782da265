// include/lfmmi/prefix_score.hpp
//
// MMI Prefix Score for label-synchronous (AED) decoding: the summed-over-t
// ratio of numerator and denominator prefix probabilities,
//   S_pref(W, O) = log sum_t P(O_1^t | G_num(W)) / P(O_1^t | G_den),
// with incremental caching so each partial hypothesis costs one forward pass.

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lfmmi/emission.hpp"
#include "lfmmi/graphs.hpp"

namespace lfmmi {

// forward_prefix_series on the denominator graph; computed once per
// utterance and shared read-only by every hypothesis.
std::vector<double> precompute_denominator_series(const Fsa& g_den,
                                                  const EmissionMatrix& e);

class PrefixScorer {
 public:
  // Numerator prefix state for one hypothesis. Immutable once built; cheap
  // to share across extensions.
  struct Entry {
    std::vector<int> tokens;
    std::vector<double> num_series;  // length T, entry t-1 = log P(O_1^t | G_num)
    double score = kLogZero;         // S_pref of this prefix
  };
  using EntryPtr = std::shared_ptr<const Entry>;

  // Computes the denominator series once (counted for the caching contract)
  // and the empty-prefix entry.
  PrefixScorer(const Fsa& g_den, const EmissionMatrix& e, const Lexicon& lex);

  // The empty prefix, baseline for the first first-order difference.
  const EntryPtr& start() const { return root_; }

  // First-order difference S_pref(W + token) - S_pref(W), plus the child
  // entry for reuse.
  // One numerator forward pass. A child whose minimal path exceeds T yields
  // a -inf score and a -inf difference (a value, not an error).
  std::pair<double, EntryPtr> extend(const Entry& parent, int token_id) const;

  // From-scratch S_pref of an arbitrary prefix (builds the graph, one pass).
  double prefix_score(std::span<const int> token_ids) const;
  EntryPtr make_entry(std::vector<int> token_ids) const;

  // Complete-sequence LF-MMI posterior log P(O|G_num(W)) - log P(O|G_den):
  // the S_pref of W followed by <eos>, used for finishing hypotheses.
  double complete_score(const Entry& entry) const;

  const std::vector<double>& denominator_series() const { return den_series_; }
  int denominator_forward_count() const { return den_forward_count_; }
  int frames() const { return e_->frames(); }
  const Lexicon& lexicon() const { return *lex_; }

 private:
  const Fsa* g_den_;
  const EmissionMatrix* e_;
  const Lexicon* lex_;
  std::vector<double> den_series_;
  int den_forward_count_ = 0;
  EntryPtr root_;
};

}  // namespace lfmmi
