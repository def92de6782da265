// src/alignment_score.cpp

#include "lfmmi/alignment_score.hpp"

#include <algorithm>

#include "lfmmi/forward.hpp"

namespace lfmmi {

AlignmentScorer::AlignmentScorer(const Fsa& g_den, const EmissionMatrix& e,
                                 const Lexicon& lex, int lookahead)
    : e_(&e), lex_(&lex), lookahead_(lookahead), frames_(e.frames()) {
  if (lookahead < 0)
    throw std::invalid_argument("alignment score: lookahead must be >= 0");
  den_full_.resize(frames_ + 1);
  den_full_[0] = empty_path_score(g_den);
  std::vector<double> series = forward_prefix_series(g_den, e);
  ++den_forward_count_;
  std::copy(series.begin(), series.end(), den_full_.begin() + 1);
  root_ = make_entry({});
}

AlignmentScorer::EntryPtr AlignmentScorer::make_entry(std::vector<int> token_ids) const {
  Fsa g_num = build_numerator_graph(token_ids, *lex_);
  auto entry = std::make_shared<Entry>();
  entry->tokens = std::move(token_ids);
  entry->ratio.resize(frames_ + 1);
  double num0 = empty_path_score(g_num);
  entry->ratio[0] = num0 == kLogZero ? kLogZero : num0 - den_full_[0];
  std::vector<double> series = forward_prefix_series(g_num, *e_);
  for (int t = 1; t <= frames_; ++t) {
    double num = series[t - 1];
    entry->ratio[t] = num == kLogZero ? kLogZero : num - den_full_[t];
  }
  return entry;
}

double AlignmentScorer::score(const Entry& entry, int t) const {
  if (t < 0 || t > frames_)
    throw std::invalid_argument("alignment score: frame index " + std::to_string(t) +
                                " out of range [0, " + std::to_string(frames_) + "]");
  int hi = std::min(t + lookahead_, frames_);
  double best = kLogZero;
  for (int i = t; i <= hi; ++i) best = std::max(best, entry.ratio[i]);
  return best;
}

double AlignmentScorer::blank_delta(const Entry& entry, int t) const {
  if (t + 1 > frames_)
    throw std::invalid_argument("alignment score: no frame left to consume at t = " +
                                std::to_string(t));
  double next = score(entry, t + 1);
  double cur = score(entry, t);
  if (next == kLogZero || cur == kLogZero) return kLogZero;
  return next - cur;
}

std::pair<double, AlignmentScorer::EntryPtr> AlignmentScorer::token_delta(
    const Entry& parent, int token_id, int t) const {
  if (token_id < 0 || token_id >= lex_->num_tokens())
    throw std::invalid_argument("alignment score: token id " + std::to_string(token_id) +
                                " not in the lexicon");
  std::vector<int> tokens = parent.tokens;
  tokens.push_back(token_id);
  EntryPtr child = make_entry(std::move(tokens));
  double child_score = score(*child, t);
  if (child_score == kLogZero) return {kLogZero, std::move(child)};
  double parent_score = score(parent, t);
  double delta = parent_score == kLogZero ? kLogZero : child_score - parent_score;
  return {delta, std::move(child)};
}

}  // namespace lfmmi
