// src/lexicon.cpp

#include "lfmmi/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace lfmmi {

namespace {

constexpr char kMagic[4] = {'L', 'L', 'E', 'X'};
constexpr uint32_t kVersion = 1;

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream iss(line);
  std::string field;
  while (iss >> field) fields.push_back(field);
  return fields;
}

template <typename T>
void write_pod(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw ParseError("lexicon: truncated input");
  return value;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  uint32_t len = read_pod<uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw ParseError("lexicon: truncated string");
  return s;
}

}  // namespace

int Lexicon::token_id(const std::string& token) const {
  auto it = std::find(tokens.begin(), tokens.end(), token);
  return it == tokens.end() ? -1 : static_cast<int>(it - tokens.begin());
}

int Lexicon::phone_id(const std::string& phone) const {
  auto it = std::find(phones.begin(), phones.end(), phone);
  return it == phones.end() ? -1 : static_cast<int>(it - phones.begin());
}

std::vector<int> Lexicon::expand(std::span<const int> token_ids) const {
  std::vector<int> out;
  for (int id : token_ids) {
    if (id < 0 || id >= num_tokens())
      throw std::invalid_argument("lexicon: token id " + std::to_string(id) +
                                  " out of range");
    const auto& pron = pronunciations[id];
    out.insert(out.end(), pron.begin(), pron.end());
  }
  return out;
}

Lexicon compile_lexicon(const std::string& text, const std::string& silence_symbol,
                        double silence_prob) {
  if (silence_prob < 0.0 || silence_prob > 1.0)
    throw std::invalid_argument("lexicon: silence_prob must be in [0,1]");

  Lexicon lex;
  lex.phones.push_back("<blk>");
  lex.silence_prob = silence_prob;

  std::istringstream iss(text);
  std::string line;
  int line_no = 0;
  bool saw_header = false;
  std::map<std::string, int> phone_ids;
  std::map<std::string, int> token_ids;

  while (std::getline(iss, line)) {
    ++line_no;
    auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (!saw_header) {
      if (fields[0] != "phones:")
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": expected `phones:` header");
      if (fields.size() < 2)
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": empty phone inventory");
      for (size_t i = 1; i < fields.size(); ++i) {
        const std::string& sym = fields[i];
        if (sym == "<blk>")
          throw ParseError("lexicon line " + std::to_string(line_no) +
                           ": phone symbol <blk> is reserved");
        if (phone_ids.count(sym))
          throw ParseError("lexicon line " + std::to_string(line_no) +
                           ": duplicate phone symbol " + sym);
        phone_ids[sym] = static_cast<int>(lex.phones.size());
        lex.phones.push_back(sym);
      }
      saw_header = true;
      continue;
    }

    if (fields.size() < 2)
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": token `" + fields[0] + "` has no pronunciation");
    std::vector<int> pron;
    for (size_t i = 1; i < fields.size(); ++i) {
      auto it = phone_ids.find(fields[i]);
      if (it == phone_ids.end())
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": unknown phone symbol " + fields[i]);
      pron.push_back(it->second);
    }
    auto it = token_ids.find(fields[0]);
    if (it != token_ids.end()) {
      if (lex.pronunciations[it->second] != pron)
        throw ParseError("lexicon line " + std::to_string(line_no) +
                         ": token `" + fields[0] +
                         "` duplicated with a conflicting pronunciation");
      continue;  // identical duplicate, keep the single entry
    }
    token_ids[fields[0]] = static_cast<int>(lex.tokens.size());
    lex.tokens.push_back(fields[0]);
    lex.pronunciations.push_back(std::move(pron));
  }

  if (!saw_header) throw ParseError("lexicon: missing `phones:` header line");

  auto sil = phone_ids.find(silence_symbol);
  lex.silence_phone = sil == phone_ids.end() ? 0 : sil->second;
  return lex;
}

void save_lexicon(const Lexicon& lex, std::ostream& os) {
  os.write(kMagic, 4);
  write_pod<uint32_t>(os, kVersion);
  write_pod<uint32_t>(os, static_cast<uint32_t>(lex.phones.size()));
  for (const auto& p : lex.phones) write_string(os, p);
  write_pod<uint32_t>(os, static_cast<uint32_t>(lex.tokens.size()));
  for (size_t i = 0; i < lex.tokens.size(); ++i) {
    write_string(os, lex.tokens[i]);
    write_pod<uint32_t>(os, static_cast<uint32_t>(lex.pronunciations[i].size()));
    for (int p : lex.pronunciations[i]) write_pod<uint32_t>(os, static_cast<uint32_t>(p));
  }
  write_pod<uint32_t>(os, static_cast<uint32_t>(lex.silence_phone));
  write_pod<double>(os, lex.silence_prob);
}

void save_lexicon(const Lexicon& lex, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("lexicon: cannot open " + path + " for writing");
  save_lexicon(lex, os);
  if (!os) throw ParseError("lexicon: write failed for " + path);
}

Lexicon load_lexicon(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("lexicon: bad magic, not an LLEX file");
  uint32_t version = read_pod<uint32_t>(is);
  if (version != kVersion)
    throw ParseError("lexicon: unknown format version " + std::to_string(version));
  Lexicon lex;
  lex.phones.clear();
  uint32_t num_phones = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < num_phones; ++i) lex.phones.push_back(read_string(is));
  uint32_t num_tokens = read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < num_tokens; ++i) {
    lex.tokens.push_back(read_string(is));
    uint32_t pron_len = read_pod<uint32_t>(is);
    std::vector<int> pron(pron_len);
    for (auto& p : pron) p = static_cast<int>(read_pod<uint32_t>(is));
    lex.pronunciations.push_back(std::move(pron));
  }
  lex.silence_phone = static_cast<int>(read_pod<uint32_t>(is));
  lex.silence_prob = read_pod<double>(is);
  return lex;
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("lexicon: cannot open " + path);
  return load_lexicon(is);
}

void BigramLm::validate(double tol) const {
  if (num_units < 2) throw std::invalid_argument("bigram: need at least one real phone");
  if (initial.size() != static_cast<size_t>(num_units) ||
      transitions.size() != static_cast<size_t>(num_units) * num_units)
    throw std::invalid_argument("bigram: table size mismatch");
  auto check_row = [&](const double* row, const std::string& what) {
    double lse = kLogZero;
    for (int p = 1; p < num_units; ++p) lse = log_add(lse, row[p]);
    if (std::isnan(lse) || std::abs(lse) > tol)
      throw std::invalid_argument("bigram: " + what + " does not normalize");
  };
  check_row(initial.data(), "initial row");
  for (int prev = 1; prev < num_units; ++prev) {
    check_row(transitions.data() + static_cast<size_t>(prev) * num_units,
              "row for phone " + std::to_string(prev));
  }
}

BigramLm estimate_phone_bigram(const std::vector<std::vector<int>>& token_transcripts,
                               const Lexicon& lex) {
  if (token_transcripts.empty())
    throw std::invalid_argument("bigram: empty transcript corpus");

  const int P = lex.num_units();
  const int real = P - 1;
  if (real < 1) throw std::invalid_argument("bigram: lexicon has no real phones");

  std::vector<long long> unigram(P, 0);
  std::vector<long long> pair_counts(static_cast<size_t>(P) * P, 0);
  long long total = 0;

  for (const auto& transcript : token_transcripts) {
    std::vector<int> phones = lex.expand(transcript);
    // Silence never appears in lexicon expansions of transcripts; counting
    // runs over the expansion as-is.
    for (size_t i = 0; i < phones.size(); ++i) {
      ++unigram[phones[i]];
      ++total;
      if (i + 1 < phones.size())
        ++pair_counts[static_cast<size_t>(phones[i]) * P + phones[i + 1]];
    }
  }

  BigramLm lm;
  lm.num_units = P;
  lm.initial.assign(P, kLogZero);
  lm.transitions.assign(static_cast<size_t>(P) * P, kLogZero);
  for (int p = 1; p < P; ++p) {
    lm.initial[p] = std::log(static_cast<double>(unigram[p] + 1) /
                             static_cast<double>(total + real));
  }
  for (int prev = 1; prev < P; ++prev) {
    long long row_total = 0;
    for (int next = 1; next < P; ++next)
      row_total += pair_counts[static_cast<size_t>(prev) * P + next];
    for (int next = 1; next < P; ++next) {
      long long c = pair_counts[static_cast<size_t>(prev) * P + next];
      lm.transitions[static_cast<size_t>(prev) * P + next] =
          std::log(static_cast<double>(c + 1) / static_cast<double>(row_total + real));
    }
  }
  lm.validate();
  return lm;
}

// Rows in bigram.json cover the real phones (ids 1..P-1) only; the blank
// row/column is kLogZero and JSON cannot carry -inf.
std::string bigram_to_json(const BigramLm& lm, const Lexicon& lex) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["order"] = BigramLm::kOrder;
  j["phones"] = lex.phones;
  std::vector<double> initial(lm.initial.begin() + 1, lm.initial.end());
  j["initial"] = initial;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (int prev = 1; prev < lm.num_units; ++prev) {
    std::vector<double> row;
    for (int next = 1; next < lm.num_units; ++next) row.push_back(lm.log_prob(prev, next));
    rows.push_back(row);
  }
  j["transitions"] = rows;
  return j.dump(2) + "\n";
}

BigramLm bigram_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bigram.json: ") + e.what());
  }
  if (!j.contains("format_version") || j["format_version"] != 1)
    throw ParseError("bigram.json: missing or unknown format_version");
  if (!j.contains("order") || j["order"] != BigramLm::kOrder)
    throw ParseError("bigram.json: order must be 2");
  std::vector<std::string> phones = j.at("phones").get<std::vector<std::string>>();
  BigramLm lm;
  lm.num_units = static_cast<int>(phones.size());
  const int P = lm.num_units;
  auto initial = j.at("initial").get<std::vector<double>>();
  if (initial.size() != static_cast<size_t>(P - 1))
    throw ParseError("bigram.json: initial row has the wrong length");
  lm.initial.assign(P, kLogZero);
  std::copy(initial.begin(), initial.end(), lm.initial.begin() + 1);
  lm.transitions.assign(static_cast<size_t>(P) * P, kLogZero);
  const auto& rows = j.at("transitions");
  if (rows.size() != static_cast<size_t>(P - 1))
    throw ParseError("bigram.json: missing transition rows");
  for (int prev = 1; prev < P; ++prev) {
    auto row = rows[prev - 1].get<std::vector<double>>();
    if (row.size() != static_cast<size_t>(P - 1))
      throw ParseError("bigram.json: transition row " + std::to_string(prev) +
                       " has the wrong length");
    for (int next = 1; next < P; ++next)
      lm.transitions[static_cast<size_t>(prev) * P + next] = row[next - 1];
  }
  lm.validate();
  return lm;
}

}  // namespace lfmmi
