// src/decoders.cpp

#include "lfmmi/decoders.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "lfmmi/forward.hpp"

namespace lfmmi {

namespace {

std::string join_tokens(const Vocabulary& vocab, const std::vector<int>& prefix) {
  std::string out;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (i) out += ' ';
    out += vocab.name(prefix[i]);
  }
  return out;
}

// Maps decoder token ids to lexicon token ids by name; every vocabulary
// token must be pronounceable.
std::vector<int> map_vocab_to_lexicon(const Vocabulary& vocab, const Lexicon& lex) {
  std::vector<int> ids(vocab.size());
  for (int w = 0; w < vocab.size(); ++w) {
    ids[w] = lex.token_id(vocab.name(w));
    if (ids[w] < 0)
      throw std::invalid_argument("decoder: vocabulary token `" + vocab.name(w) +
                                  "` is not in the lexicon");
  }
  return ids;
}

void check_row_normalized(const std::vector<double>& row, const std::string& what) {
  double lse = kLogZero;
  for (double v : row) lse = log_add(lse, v);
  if (std::isnan(lse) || std::abs(lse) > 1e-4)
    throw ParseError("provider row for " + what + " is not log-normalized");
}

double logsumexp(const std::vector<double>& v) {
  double lse = kLogZero;
  for (double x : v) lse = log_add(lse, x);
  return lse;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (const auto& t : tokens_) {
    if (t == "<sos>" || t == "<eos>" || t == "<blk>")
      throw std::invalid_argument("vocabulary: `" + t + "` is a reserved symbol");
    if (t.empty())
      throw std::invalid_argument("vocabulary: empty token");
  }
}

const std::string& Vocabulary::name(int id) const {
  static const std::string kSos = "<sos>", kEos = "<eos>", kBlk = "<blk>";
  if (id >= 0 && id < size()) return tokens_[id];
  if (id == sos()) return kSos;
  if (id == eos()) return kEos;
  if (id == blank()) return kBlk;
  throw std::invalid_argument("vocabulary: id " + std::to_string(id) + " out of range");
}

int Vocabulary::find(const std::string& token) const {
  for (int i = 0; i < size(); ++i) {
    if (tokens_[i] == token) return i;
  }
  if (token == "<sos>") return sos();
  if (token == "<eos>") return eos();
  if (token == "<blk>") return blank();
  return -1;
}

// --- table providers ---------------------------------------------------

TableAedProvider::TableAedProvider(
    const Vocabulary& vocab, std::map<std::string, std::map<std::string, double>> table)
    : vocab_(&vocab) {
  for (auto& [prefix, dist] : table) {
    std::vector<double> row(vocab.extended_size(), kLogZero);
    for (auto& [token, lp] : dist) {
      int id = vocab.find(token);
      if (id < 0 || id == vocab.sos() || id == vocab.blank())
        throw ParseError("aed table: bad token `" + token + "` for prefix `" + prefix +
                         "`");
      row[id] = lp;
    }
    check_row_normalized(row, "prefix `" + prefix + "`");
    rows_.emplace(prefix, std::move(row));
  }
}

TableAedProvider TableAedProvider::from_json(const Vocabulary& vocab,
                                             const std::string& json_text) {
  std::map<std::string, std::map<std::string, double>> table;
  try {
    auto j = nlohmann::json::parse(json_text);
    table = j.get<decltype(table)>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("aed table json: ") + e.what());
  }
  return TableAedProvider(vocab, std::move(table));
}

std::vector<double> TableAedProvider::log_posteriors(const std::vector<int>& prefix) const {
  std::string key = join_tokens(*vocab_, prefix);
  auto it = rows_.find(key);
  if (it == rows_.end())
    throw ParseError("aed table: no row for prefix `" + key + "`");
  return it->second;
}

TableNtProvider::TableNtProvider(
    const Vocabulary& vocab, std::map<std::string, std::map<std::string, double>> table)
    : vocab_(&vocab) {
  for (auto& [key, dist] : table) {
    std::vector<double> row(vocab.extended_size(), kLogZero);
    for (auto& [token, lp] : dist) {
      int id = vocab.find(token);
      if (id < 0 || id == vocab.sos() || id == vocab.eos())
        throw ParseError("nt table: bad token `" + token + "` for key `" + key + "`");
      row[id] = lp;
    }
    check_row_normalized(row, "key `" + key + "`");
    rows_.emplace(key, std::move(row));
  }
}

TableNtProvider TableNtProvider::from_json(const Vocabulary& vocab,
                                           const std::string& json_text) {
  std::map<std::string, std::map<std::string, double>> table;
  try {
    auto j = nlohmann::json::parse(json_text);
    table = j.get<decltype(table)>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("nt table json: ") + e.what());
  }
  return TableNtProvider(vocab, std::move(table));
}

std::vector<double> TableNtProvider::log_posteriors(const std::vector<int>& prefix,
                                                    int t) const {
  std::string key = join_tokens(*vocab_, prefix) + "@" + std::to_string(t);
  auto it = rows_.find(key);
  if (it == rows_.end())
    throw ParseError("nt table: no row for key `" + key + "`");
  return it->second;
}

// --- emission-derived providers -----------------------------------------

CtcPrefixAedProvider::CtcPrefixAedProvider(const Vocabulary& vocab, const Lexicon& lex,
                                           const EmissionMatrix& e)
    : vocab_(&vocab), lex_(&lex), e_(&e), token_map_(map_vocab_to_lexicon(vocab, lex)) {}

std::vector<double> CtcPrefixAedProvider::log_posteriors(
    const std::vector<int>& prefix) const {
  std::vector<int> lex_prefix;
  lex_prefix.reserve(prefix.size() + 1);
  for (int w : prefix) lex_prefix.push_back(token_map_[w]);

  std::vector<double> row(vocab_->extended_size(), kLogZero);
  for (int w = 0; w < vocab_->size(); ++w) {
    lex_prefix.push_back(token_map_[w]);
    std::vector<double> series =
        forward_prefix_series(build_numerator_graph(lex_prefix, *lex_), *e_);
    lex_prefix.pop_back();
    row[w] = logsumexp(series);
  }
  row[vocab_->eos()] = forward_score(build_numerator_graph(lex_prefix, *lex_), *e_);

  double lse = logsumexp(row);
  if (lse == kLogZero) return row;  // dead prefix, every extension impossible
  for (double& v : row) {
    if (v != kLogZero) v -= lse;
  }
  return row;
}

EmissionNtProvider::EmissionNtProvider(const Vocabulary& vocab, const Lexicon& lex,
                                       const EmissionMatrix& e)
    : vocab_(&vocab), e_(&e) {
  std::vector<int> ids = map_vocab_to_lexicon(vocab, lex);
  first_phone_.resize(vocab.size());
  for (int w = 0; w < vocab.size(); ++w)
    first_phone_[w] = lex.pronunciations[ids[w]].front();
}

std::vector<double> EmissionNtProvider::log_posteriors(const std::vector<int>& prefix,
                                                       int t) const {
  (void)prefix;  // memoryless surrogate
  if (t < 0 || t >= e_->frames())
    throw std::invalid_argument("nt provider: frame " + std::to_string(t) +
                                " out of range");
  std::vector<double> row(vocab_->extended_size(), kLogZero);
  row[vocab_->blank()] = e_->at(t, 0);
  for (int w = 0; w < vocab_->size(); ++w) row[w] = e_->at(t, first_phone_[w]);
  double lse = logsumexp(row);
  for (double& v : row) {
    if (v != kLogZero) v -= lse;
  }
  return row;
}

// --- AED beam search -----------------------------------------------------

namespace {

struct AedHyp {
  std::vector<int> tokens;
  std::map<std::string, double> breakdown;
  PrefixScorer::EntryPtr mmi;

  double total() const {
    double sum = 0.0;
    for (const auto& [src, v] : breakdown) sum += v;
    return sum;
  }
};

template <typename Hyp>
void beam_prune(std::vector<Hyp>& hyps, int beam) {
  std::stable_sort(hyps.begin(), hyps.end(),
                   [](const Hyp& a, const Hyp& b) { return a.total() > b.total(); });
  if (static_cast<int>(hyps.size()) > beam) hyps.resize(beam);
}

}  // namespace

NBestList aed_beam_search(const AedScoreProvider* att, const AedScoreProvider* ctc,
                          const PrefixScorer* mmi, const Vocabulary& vocab, int frames,
                          const AedSearchConfig& cfg, const std::string& utt_id) {
  const bool use_att = att != nullptr && cfg.beta_att != 0.0;
  const bool use_ctc = ctc != nullptr && cfg.beta_ctc != 0.0;
  const bool use_mmi = mmi != nullptr && cfg.beta_mmi != 0.0;
  if (!use_att && !use_ctc && !use_mmi)
    throw std::invalid_argument("aed search: no active score source");
  if (cfg.beam < 1) throw std::invalid_argument("aed search: beam must be >= 1");
  const int max_len = cfg.max_len > 0 ? cfg.max_len : frames;
  if (max_len < 1) throw std::invalid_argument("aed search: empty utterance");

  std::vector<int> lex_ids;
  if (use_mmi) lex_ids = map_vocab_to_lexicon(vocab, mmi->lexicon());

  std::vector<AedHyp> active;
  active.push_back(AedHyp{{}, {}, use_mmi ? mmi->start() : nullptr});
  std::vector<AedHyp> finished;

  for (int u = 1; u <= max_len; ++u) {
    std::vector<AedHyp> next;
    for (const AedHyp& hyp : active) {
      std::vector<double> att_row, ctc_row;
      if (use_att) att_row = att->log_posteriors(hyp.tokens);
      if (use_ctc) ctc_row = ctc->log_posteriors(hyp.tokens);

      for (int w = 0; w <= vocab.size(); ++w) {
        const int sym = w == vocab.size() ? vocab.eos() : w;
        AedHyp child = hyp;
        if (use_att) child.breakdown["att"] += cfg.beta_att * att_row[sym];
        if (use_ctc) child.breakdown["ctc"] += cfg.beta_ctc * ctc_row[sym];
        if (use_mmi) {
          if (sym == vocab.eos()) {
            double complete = mmi->complete_score(*hyp.mmi);
            child.breakdown["mmi"] +=
                cfg.beta_mmi *
                (complete == kLogZero ? kLogZero : complete - hyp.mmi->score);
          } else {
            auto [delta, entry] = mmi->extend(*hyp.mmi, lex_ids[w]);
            child.breakdown["mmi"] += delta == kLogZero ? kLogZero : cfg.beta_mmi * delta;
            child.mmi = std::move(entry);
          }
        }
        if (sym == vocab.eos()) {
          finished.push_back(std::move(child));
        } else {
          child.tokens.push_back(w);
          next.push_back(std::move(child));
        }
      }
    }
    beam_prune(next, cfg.beam);
    active = std::move(next);
    if (active.empty()) break;
    if (!finished.empty()) {
      double best_finished = kLogZero;
      for (const AedHyp& h : finished) best_finished = std::max(best_finished, h.total());
      // Stop once the best active hypothesis can no longer beat the best
      // finished one.
      if (active.front().total() <= best_finished) break;
    }
  }

  NBestList result;
  result.utt_id = utt_id;
  std::vector<AedHyp>* source = &finished;
  if (finished.empty()) {
    result.warning = true;
    source = &active;
  }
  std::stable_sort(source->begin(), source->end(),
                   [](const AedHyp& a, const AedHyp& b) { return a.total() > b.total(); });
  const int keep = cfg.nbest > 0 ? cfg.nbest : cfg.beam;
  for (const AedHyp& h : *source) {
    if (static_cast<int>(result.entries.size()) >= keep) break;
    NBestEntry entry;
    for (int w : h.tokens) entry.tokens.push_back(vocab.name(w));
    entry.total = h.total();
    entry.breakdown = h.breakdown;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

// --- NT beam search (ALSD) -------------------------------------------------

std::vector<NtHypothesis> combine_hypotheses(const std::vector<NtHypothesis>& hyps) {
  std::vector<NtHypothesis> merged;
  std::map<std::pair<std::vector<int>, int>, size_t> groups;
  for (const NtHypothesis& h : hyps) {
    auto key = std::make_pair(h.tokens, h.t);
    auto it = groups.find(key);
    if (it == groups.end()) {
      groups.emplace(std::move(key), merged.size());
      merged.push_back(h);
    } else {
      // Transducer components sum across alignment paths; the MMI component
      // assesses the aligned pair itself and stays the representative's.
      merged[it->second].nt_score = log_add(merged[it->second].nt_score, h.nt_score);
    }
  }
  return merged;
}

NBestList nt_beam_search(const NtScoreProvider& provider, const AlignmentScorer* mmi,
                         const Vocabulary& vocab, int frames, const NtSearchConfig& cfg,
                         const std::string& utt_id) {
  const bool use_mmi = mmi != nullptr && cfg.beta_mmi != 0.0;
  if (cfg.beam < 1) throw std::invalid_argument("nt search: beam must be >= 1");
  if (frames < 1) throw std::invalid_argument("nt search: empty utterance");
  const int u_max = cfg.u_max > 0 ? cfg.u_max : frames;

  std::vector<int> lex_ids;
  if (use_mmi) lex_ids = map_vocab_to_lexicon(vocab, mmi->lexicon());

  std::vector<NtHypothesis> active;
  active.push_back(NtHypothesis{{}, 0, 0.0, 0.0, use_mmi ? mmi->start() : nullptr});
  std::vector<NtHypothesis> finished;

  for (int l = 1; l <= frames + u_max; ++l) {
    std::vector<NtHypothesis> next;
    for (const NtHypothesis& hyp : active) {
      std::vector<double> row = provider.log_posteriors(hyp.tokens, hyp.t);

      NtHypothesis blank = hyp;
      blank.t += 1;
      blank.nt_score += row[vocab.blank()];
      if (use_mmi) {
        double delta = mmi->blank_delta(*hyp.mmi_entry, hyp.t);
        blank.mmi_score += delta == kLogZero ? kLogZero : cfg.beta_mmi * delta;
      }
      if (blank.t == frames) {
        finished.push_back(std::move(blank));
      } else {
        next.push_back(std::move(blank));
      }

      if (static_cast<int>(hyp.tokens.size()) < u_max) {
        for (int w = 0; w < vocab.size(); ++w) {
          NtHypothesis child = hyp;
          child.tokens.push_back(w);
          child.nt_score += row[w];
          if (use_mmi) {
            auto [delta, entry] = mmi->token_delta(*hyp.mmi_entry, lex_ids[w], hyp.t);
            child.mmi_score += delta == kLogZero ? kLogZero : cfg.beta_mmi * delta;
            child.mmi_entry = std::move(entry);
          }
          next.push_back(std::move(child));
        }
      }
    }
    next = combine_hypotheses(next);
    std::stable_sort(next.begin(), next.end(), [](const NtHypothesis& a,
                                                  const NtHypothesis& b) {
      return a.total() > b.total();
    });
    if (static_cast<int>(next.size()) > cfg.beam) next.resize(cfg.beam);
    active = std::move(next);
    if (active.empty()) break;
  }

  NBestList result;
  result.utt_id = utt_id;
  std::vector<NtHypothesis>* source = &finished;
  if (finished.empty()) {
    result.warning = true;
    source = &active;
  }
  std::stable_sort(source->begin(), source->end(),
                   [](const NtHypothesis& a, const NtHypothesis& b) {
                     return a.total() > b.total();
                   });
  const int keep = cfg.nbest > 0 ? cfg.nbest : cfg.beam;
  for (const NtHypothesis& h : *source) {
    if (static_cast<int>(result.entries.size()) >= keep) break;
    NBestEntry entry;
    for (int w : h.tokens) entry.tokens.push_back(vocab.name(w));
    entry.total = h.total();
    entry.breakdown["nt"] = h.nt_score;
    if (use_mmi) entry.breakdown["mmi"] = h.mmi_score;
    result.entries.push_back(std::move(entry));
  }
  return result;
}

// --- rescoring, edit distance, MBR risk ----------------------------------

NBestList apply_mmi_rescoring(const NBestList& nbest,
                              const std::vector<double>& mmi_terms, double lambda_mmi) {
  if (mmi_terms.size() != nbest.entries.size())
    throw std::invalid_argument("rescore: one MMI term per hypothesis required");
  if (lambda_mmi == 0.0) return nbest;

  NBestList out = nbest;
  for (size_t i = 0; i < out.entries.size(); ++i) {
    double term = mmi_terms[i] == kLogZero ? kLogZero : lambda_mmi * mmi_terms[i];
    out.entries[i].breakdown["mmi_rescore"] = term;
    out.entries[i].total = term == kLogZero ? kLogZero : out.entries[i].total + term;
    if (term == kLogZero) out.warning = true;
  }
  std::stable_sort(out.entries.begin(), out.entries.end(),
                   [](const NBestEntry& a, const NBestEntry& b) { return a.total > b.total; });
  return out;
}

NBestList lfmmi_rescore(const NBestList& nbest, const EmissionMatrix& e,
                        const Lexicon& lex, double lambda_mmi) {
  if (nbest.entries.empty())
    throw std::invalid_argument("rescore: empty n-best list");
  if (lambda_mmi == 0.0) return nbest;

  // The denominator is shared by every hypothesis of the utterance and
  // cancels in the ranking; only numerator scores are computed.
  std::vector<double> terms;
  terms.reserve(nbest.entries.size());
  for (const NBestEntry& entry : nbest.entries) {
    std::vector<int> ids;
    bool oov = false;
    for (const auto& name : entry.tokens) {
      int id = lex.token_id(name);
      if (id < 0) {
        oov = true;
        break;
      }
      ids.push_back(id);
    }
    terms.push_back(oov ? kLogZero
                        : forward_score(build_numerator_graph(ids, lex), e));
  }
  return apply_mmi_rescoring(nbest, terms, lambda_mmi);
}

namespace {

template <typename T>
int edit_distance_impl(std::span<const T> a, std::span<const T> b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int> dist((n + 1) * (m + 1));
  auto d = [&](size_t i, size_t j) -> int& { return dist[i * (m + 1) + j]; };
  for (size_t i = 0; i <= n; ++i) d(i, 0) = static_cast<int>(i);
  for (size_t j = 0; j <= m; ++j) d(0, j) = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      int sub = d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
      d(i, j) = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, sub});
    }
  }
  return d(n, m);
}

}  // namespace

int edit_distance(std::span<const int> a, std::span<const int> b) {
  return edit_distance_impl(a, b);
}

int edit_distance(std::span<const std::string> a, std::span<const std::string> b) {
  return edit_distance_impl(a, b);
}

double approx_bayesian_risk(std::span<const std::pair<double, double>> posterior_risk,
                            double epsilon) {
  if (posterior_risk.empty())
    throw std::invalid_argument("mbr: empty hypothesis list");
  if (epsilon < 0.0) throw std::invalid_argument("mbr: epsilon must be >= 0");
  double num = 0.0, den = epsilon;
  for (const auto& [log_posterior, risk] : posterior_risk) {
    double p = std::exp(log_posterior);
    num += p * risk;
    den += p;
  }
  return num / den;
}

double approx_bayesian_risk(const NBestList& nbest,
                            std::span<const std::string> reference, double epsilon) {
  std::vector<std::pair<double, double>> pr;
  pr.reserve(nbest.entries.size());
  for (const NBestEntry& entry : nbest.entries) {
    pr.emplace_back(entry.total,
                    static_cast<double>(edit_distance(entry.tokens, reference)));
  }
  return approx_bayesian_risk(pr, epsilon);
}

}  // namespace lfmmi
