// include/lfmmi/alignment_score.hpp
//
// MMI Alignment Score for frame-synchronous (transducer) decoding:
//   S_ali(W, O_1^t) = max_{0 <= i <= tau} [log P(O_1^{t+i}|G_num(W))
//                                          - log P(O_1^{t+i}|G_den)]
// with the look-ahead window clamped at T, plus the score deltas along the
// t-axis (blank) and u-axis (token).

#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lfmmi/emission.hpp"
#include "lfmmi/graphs.hpp"

namespace lfmmi {

inline constexpr int kDefaultLookahead = 3;

class AlignmentScorer {
 public:
  // Per-hypothesis numerator state: the full ratio series so any future t
  // query is O(1) after one forward pass. ratio[t] covers t = 0..T, where
  // ratio[0] is the zero-frame (final-weight-only) score; entries with an
  // infeasible numerator are kLogZero.
  struct Entry {
    std::vector<int> tokens;
    std::vector<double> ratio;
  };
  using EntryPtr = std::shared_ptr<const Entry>;

  AlignmentScorer(const Fsa& g_den, const EmissionMatrix& e, const Lexicon& lex,
                  int lookahead = kDefaultLookahead);

  const EntryPtr& start() const { return root_; }
  EntryPtr make_entry(std::vector<int> token_ids) const;

  // The look-ahead max. Valid for 0 <= t <= T (t = 0 is the pre-first-
  // frame state used by the decoder's initial hypothesis); throws otherwise.
  double score(const Entry& entry, int t) const;

  // t-axis difference S_ali(W, t+1) - S_ali(W, t); requires t+1 <= T.
  // No graph rebuild. A -inf endpoint yields -inf (the hypothesis is dead).
  double blank_delta(const Entry& entry, int t) const;

  // u-axis difference S_ali(W + token, t) - S_ali(W, t), plus the
  // child entry (one numerator forward pass). An extension whose minimal
  // path exceeds the look-ahead window yields -inf.
  std::pair<double, EntryPtr> token_delta(const Entry& parent, int token_id,
                                          int t) const;

  int lookahead() const { return lookahead_; }
  int frames() const { return frames_; }
  const std::vector<double>& denominator_series() const { return den_full_; }
  int denominator_forward_count() const { return den_forward_count_; }
  const Lexicon& lexicon() const { return *lex_; }

 private:
  const EmissionMatrix* e_;
  const Lexicon* lex_;
  int lookahead_;
  int frames_;
  std::vector<double> den_full_;  // t = 0..T
  int den_forward_count_ = 0;
  EntryPtr root_;
};

}  // namespace lfmmi
