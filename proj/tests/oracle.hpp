#pragma once

// Independent reference implementations used only by tests. Nothing here
// shares code with the matcher or the discovery scorer.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

struct Pattern {
  unsigned term_id;
  std::vector<std::string> tokens;
};

struct Hit {
  unsigned term_id;
  std::size_t first;
  std::size_t last;
  bool exact;
  bool operator==(const Hit&) const = default;
};

inline std::u32string decode(const std::string& s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    int n = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = n == 1 ? c : n == 2 ? (c & 0x1F) : n == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < n && i + static_cast<std::size_t>(k) < s.size(); ++k)
      cp = (cp << 6) | (static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(n);
  }
  return out;
}

/// Full-matrix Levenshtein distance.
inline std::size_t edit_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

/// 0 = equal, 1 = fuzzy hit, 2 = no match.
inline int token_match(const std::string& pattern, const std::string& observed) {
  if (pattern == observed) return 0;
  auto p = decode(pattern);
  if (p.size() >= 6 && edit_distance(p, decode(observed)) <= 1) return 1;
  return 2;
}

/// Slides every pattern over every start position. Token comparisons are
/// tabulated once per distinct (pattern token, text token) pair.
inline std::vector<Hit> all_hits(const std::vector<Pattern>& patterns,
                                 const std::vector<std::string>& text) {
  std::map<std::string, std::size_t> text_ids, pattern_ids;
  std::vector<std::size_t> coded_text;
  for (const auto& t : text) coded_text.push_back(text_ids.emplace(t, text_ids.size()).first->second);
  std::vector<std::vector<std::size_t>> coded_patterns;
  for (const auto& p : patterns) {
    std::vector<std::size_t> row;
    for (const auto& t : p.tokens) row.push_back(pattern_ids.emplace(t, pattern_ids.size()).first->second);
    coded_patterns.push_back(row);
  }
  std::vector<std::vector<int>> table(pattern_ids.size(), std::vector<int>(text_ids.size()));
  for (const auto& [pt, pi] : pattern_ids)
    for (const auto& [tt, ti] : text_ids) table[pi][ti] = token_match(pt, tt);

  std::vector<Hit> hits;
  for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
    const auto& p = coded_patterns[pi];
    const auto m = p.size();
    for (std::size_t s = 0; s + m <= coded_text.size(); ++s) {
      int fuzzy = 0;
      bool ok = true;
      for (std::size_t k = 0; k < m && ok; ++k) {
        int r = table[p[k]][coded_text[s + k]];
        if (r == 2) ok = false;
        fuzzy += r;
      }
      if (ok && fuzzy <= 1) hits.push_back({patterns[pi].term_id, s, s + m - 1, fuzzy == 0});
    }
  }
  return hits;
}

/// Walks positions left to right; at each position takes the best hit that
/// starts there (longest, then exact, then lowest term id) and jumps past it.
inline std::vector<Hit> leftmost_longest(const std::vector<Hit>& hits, std::size_t text_size) {
  std::vector<std::vector<const Hit*>> by_start(text_size);
  for (const auto& h : hits) by_start[h.first].push_back(&h);
  auto better = [](const Hit& a, const Hit& b) {
    if (a.last != b.last) return a.last > b.last;
    if (a.exact != b.exact) return a.exact;
    return a.term_id < b.term_id;
  };
  std::vector<Hit> out;
  std::size_t pos = 0;
  while (pos < text_size) {
    const Hit* best = nullptr;
    for (const Hit* h : by_start[pos])
      if (!best || better(*h, *best)) best = h;
    if (best) {
      out.push_back(*best);
      pos = best->last + 1;
    } else {
      ++pos;
    }
  }
  return out;
}

struct Scored {
  std::string text;
  double score;
  std::size_t count;
};

/// Exhaustive candidate scoring: enumerate every distinct n-gram, count its
/// occurrences by rescanning all segments, and score it.
inline std::vector<Scored> discover(const std::vector<std::vector<std::string>>& segments,
                                    const std::map<std::string, double>& background,
                                    const std::set<std::string>& stopwords, std::size_t top_k,
                                    double unknown = 1e-7, std::size_t max_n = 3) {
  std::set<std::vector<std::string>> grams;
  for (const auto& seg : segments)
    for (std::size_t n = 1; n <= max_n; ++n)
      for (std::size_t i = 0; i + n <= seg.size(); ++i)
        grams.insert(std::vector<std::string>(seg.begin() + static_cast<long>(i),
                                              seg.begin() + static_cast<long>(i + n)));
  std::vector<Scored> out;
  for (const auto& g : grams) {
    if (stopwords.count(g.front()) || stopwords.count(g.back())) continue;
    std::size_t count = 0, windows = 0;
    for (const auto& seg : segments) {
      if (seg.size() < g.size()) continue;
      for (std::size_t i = 0; i + g.size() <= seg.size(); ++i) {
        ++windows;
        if (std::equal(g.begin(), g.end(), seg.begin() + static_cast<long>(i))) ++count;
      }
    }
    double p_bg = 1;
    std::string text;
    for (const auto& t : g) {
      auto it = background.find(t);
      p_bg *= it == background.end() ? unknown : it->second;
      text += (text.empty() ? "" : " ") + t;
    }
    double score = static_cast<double>(count) *
                   std::log((static_cast<double>(count) / static_cast<double>(windows)) / p_bg);
    if (score > 0) out.push_back({text, score, count});
  }
  std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

}  // namespace oracle
