// src/nbest.cpp

#include "lfmmi/nbest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "lfmmi/common.hpp"

namespace lfmmi {

namespace {

std::string format_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

double parse_score(const std::string& s) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("nbest: bad score field `" + s + "`");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string::size_type from = 0;
  while (true) {
    auto to = s.find(sep, from);
    if (to == std::string::npos) {
      out.push_back(s.substr(from));
      return out;
    }
    out.push_back(s.substr(from, to - from));
    from = to + 1;
  }
}

}  // namespace

void write_nbest(const std::vector<NBestList>& lists, std::ostream& os) {
  for (const NBestList& list : lists) {
    int rank = 1;
    for (const NBestEntry& entry : list.entries) {
      os << list.utt_id << '\t' << rank++ << '\t' << format_score(entry.total) << '\t';
      if (entry.breakdown.empty()) {
        os << '-';
      } else {
        bool first = true;
        for (const auto& [source, score] : entry.breakdown) {
          if (!first) os << ';';
          first = false;
          os << source << '=' << format_score(score);
        }
      }
      os << '\t';
      for (size_t i = 0; i < entry.tokens.size(); ++i) {
        if (i) os << ' ';
        os << entry.tokens[i];
      }
      os << '\n';
    }
  }
}

void write_nbest(const std::vector<NBestList>& lists, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ParseError("nbest: cannot open " + path + " for writing");
  write_nbest(lists, os);
  if (!os) throw ParseError("nbest: write failed for " + path);
}

std::vector<NBestList> read_nbest(std::istream& is) {
  std::vector<NBestList> lists;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 5)
      throw ParseError("nbest line " + std::to_string(line_no) +
                       ": expected 5 tab-separated fields");
    const std::string& utt = fields[0];
    if (lists.empty() || lists.back().utt_id != utt) {
      lists.push_back(NBestList{utt, {}, false});
    }
    NBestEntry entry;
    entry.total = parse_score(fields[2]);
    if (fields[3] != "-") {
      for (const std::string& item : split(fields[3], ';')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
          throw ParseError("nbest line " + std::to_string(line_no) +
                           ": bad breakdown item `" + item + "`");
        entry.breakdown[item.substr(0, eq)] = parse_score(item.substr(eq + 1));
      }
    }
    if (!fields[4].empty()) {
      for (const std::string& token : split(fields[4], ' ')) {
        if (!token.empty()) entry.tokens.push_back(token);
      }
    }
    lists.back().entries.push_back(std::move(entry));
  }
  return lists;
}

std::vector<NBestList> read_nbest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("nbest: cannot open " + path);
  return read_nbest(is);
}

}  // namespace lfmmi
