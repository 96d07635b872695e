#pragma once

// Plain-text input formats.
//
//   scores     gene_id<TAB>score, optional header line, '#' comments allowed
//   gene sets  GMT: set_id<TAB>description<TAB>member1<TAB>member2...
//   probe map  probe_id<TAB>gene_id
//
// Every error carries the source name and 1-based line number.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "randset/catalog.hpp"
#include "randset/error.hpp"

namespace randset {
namespace io {

inline std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Reads lines, strips a trailing CR, and skips blank and '#' lines.
template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(lineno, line);
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error(path + ": cannot open file");
  return in;
}

inline GeneScoreTable parse_scores(std::istream& in, const std::string& source) {
  std::vector<std::string> ids;
  std::vector<double> scores;
  std::unordered_map<std::string, std::size_t> seen;
  bool first = true;
  for_each_record(in, [&](std::size_t lineno, const std::string& line) {
    const auto f = split_tabs(line);
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 2) throw input_error(where + "expected 2 tab-separated columns");
    const auto v = parse_real(f[1]);
    if (!v) {
      if (first) {  // header
        first = false;
        return;
      }
      throw input_error(where + "invalid score '" + f[1] + "'");
    }
    first = false;
    if (f[0].empty()) throw input_error(where + "empty gene id");
    auto [it, fresh] = seen.emplace(f[0], lineno);
    if (!fresh) {
      throw input_error(where + "duplicate id '" + f[0] + "' (lines " +
                        std::to_string(it->second) + " and " + std::to_string(lineno) + ")");
    }
    ids.push_back(f[0]);
    scores.push_back(*v);
  });
  if (ids.size() < 2) throw input_error(source + ": need at least 2 scored genes");
  return GeneScoreTable(std::move(ids), std::move(scores));
}

inline GeneScoreTable parse_scores(const std::string& path) {
  auto in = open_input(path);
  return parse_scores(in, path);
}

inline CategoryCatalog parse_gmt(std::istream& in, const std::string& source,
                                 std::size_t min_size = 10) {
  CategoryCatalog catalog;
  catalog.set_min_size(min_size);
  std::unordered_set<std::string> ids;
  for_each_record(in, [&](std::size_t lineno, const std::string& line) {
    auto f = split_tabs(line);
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (f.size() < 2 || f[0].empty()) throw input_error(where + "malformed gene set line");
    if (!ids.insert(f[0]).second) throw input_error(where + "duplicate set id '" + f[0] + "'");
    Category c{f[0], f[1], {}};
    std::unordered_set<std::string> members;
    for (std::size_t i = 2; i < f.size(); ++i) {
      if (f[i].empty()) continue;  // trailing tabs
      if (!members.insert(f[i]).second) {
        throw input_error(where + "duplicate member '" + f[i] + "' in set '" + f[0] + "'");
      }
      c.members.push_back(std::move(f[i]));
    }
    if (c.members.empty()) throw input_error(where + "set '" + f[0] + "' has no members");
    catalog.add(std::move(c));
  });
  if (catalog.size() == 0) throw input_error(source + ": no gene sets");
  return catalog;
}

inline CategoryCatalog parse_gmt(const std::string& path, std::size_t min_size = 10) {
  auto in = open_input(path);
  return parse_gmt(in, path, min_size);
}

inline ProbeGeneMap parse_probe_map(std::istream& in, const std::string& source) {
  ProbeGeneMap map;
  std::unordered_map<std::string, std::size_t> seen;
  bool first = true;
  for_each_record(in, [&](std::size_t lineno, const std::string& line) {
    const auto f = split_tabs(line);
    const auto where = source + ":" + std::to_string(lineno) + ": ";
    if (f.size() != 2 || f[0].empty() || f[1].empty()) {
      throw input_error(where + "expected probe_id<TAB>gene_id");
    }
    const bool header = first && f[0] == "probe_id" && f[1] == "gene_id";
    first = false;
    if (header) return;
    auto [it, fresh] = seen.emplace(f[0], lineno);
    if (!fresh) {
      throw input_error(where + "probe '" + f[0] + "' mapped twice (lines " +
                        std::to_string(it->second) + " and " + std::to_string(lineno) + ")");
    }
    map.add(f[0], f[1]);
  });
  if (map.empty()) throw input_error(source + ": empty probe map");
  return map;
}

inline ProbeGeneMap parse_probe_map(const std::string& path) {
  auto in = open_input(path);
  return parse_probe_map(in, path);
}

}  // namespace io
}  // namespace randset
