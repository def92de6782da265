// src/prefix_score.cpp

#include "lfmmi/prefix_score.hpp"

#include "lfmmi/forward.hpp"

namespace lfmmi {

std::vector<double> precompute_denominator_series(const Fsa& g_den,
                                                  const EmissionMatrix& e) {
  return forward_prefix_series(g_den, e);
}

PrefixScorer::PrefixScorer(const Fsa& g_den, const EmissionMatrix& e,
                           const Lexicon& lex)
    : g_den_(&g_den), e_(&e), lex_(&lex) {
  den_series_ = precompute_denominator_series(g_den, e);
  ++den_forward_count_;
  root_ = make_entry({});
}

PrefixScorer::EntryPtr PrefixScorer::make_entry(std::vector<int> token_ids) const {
  Fsa g_num = build_numerator_graph(token_ids, *lex_);
  auto entry = std::make_shared<Entry>();
  entry->tokens = std::move(token_ids);
  entry->num_series = forward_prefix_series(g_num, *e_);

  // Logsumexp over frame cut-points of the num/den ratio. Frames
  // where the numerator is infeasible contribute nothing; if all are, the
  // score is -inf (a value distinct from an error: the prefix simply needs
  // more frames than T).
  double score = kLogZero;
  for (size_t t = 0; t < entry->num_series.size(); ++t) {
    if (entry->num_series[t] == kLogZero) continue;
    score = log_add(score, entry->num_series[t] - den_series_[t]);
  }
  entry->score = score;
  return entry;
}

std::pair<double, PrefixScorer::EntryPtr> PrefixScorer::extend(const Entry& parent,
                                                               int token_id) const {
  if (token_id < 0 || token_id >= lex_->num_tokens())
    throw std::invalid_argument("prefix score: token id " + std::to_string(token_id) +
                                " not in the lexicon");
  std::vector<int> tokens = parent.tokens;
  tokens.push_back(token_id);
  EntryPtr child = make_entry(std::move(tokens));
  double delta = child->score == kLogZero ? kLogZero : child->score - parent.score;
  return {delta, std::move(child)};
}

double PrefixScorer::prefix_score(std::span<const int> token_ids) const {
  return make_entry(std::vector<int>(token_ids.begin(), token_ids.end()))->score;
}

double PrefixScorer::complete_score(const Entry& entry) const {
  if (entry.num_series.empty()) return kLogZero;
  double num = entry.num_series.back();
  return num == kLogZero ? kLogZero : num - den_series_.back();
}

}  // namespace lfmmi
