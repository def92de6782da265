// include/lfmmi/nbest.hpp
//
// Ranked hypothesis lists and their text format:
//   utt_id TAB rank TAB total_score TAB source=score;... TAB token token ...
// one line per hypothesis, scores printed with 6 decimals. An empty
// breakdown prints "-"; the token field may be empty.

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace lfmmi {

struct NBestEntry {
  std::vector<std::string> tokens;
  double total = 0.0;
  // Per-source weighted score components; total equals their sum.
  std::map<std::string, double> breakdown;

  friend bool operator==(const NBestEntry&, const NBestEntry&) = default;
};

struct NBestList {
  std::string utt_id;
  std::vector<NBestEntry> entries;  // sorted by total descending, stable ties
  // Set when the decoder returned unfinished hypotheses or rescoring met an
  // infeasible numerator.
  bool warning = false;

  friend bool operator==(const NBestList&, const NBestList&) = default;
};

void write_nbest(const std::vector<NBestList>& lists, std::ostream& os);
void write_nbest(const std::vector<NBestList>& lists, const std::string& path);
std::vector<NBestList> read_nbest(std::istream& is);
std::vector<NBestList> read_nbest(const std::string& path);

}  // namespace lfmmi
