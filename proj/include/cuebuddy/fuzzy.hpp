#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "cuebuddy/unicode.hpp"

namespace cuebuddy {

/// Minimum pattern-token length (in code points) for fuzzy matching.
inline constexpr std::size_t kFuzzyMinLength = 6;

namespace detail {

inline std::u32string to_code_points(std::string_view s) {
  std::u32string out;
  for (std::size_t pos = 0; pos < s.size();) {
    auto cp = unicode::decode_at(s, pos);
    out.push_back(static_cast<char32_t>(cp.value < 0 ? 0xFFFD : cp.value));
    pos += cp.size;
  }
  return out;
}

}  // namespace detail

/// Levenshtein distance over code points, two-row DP.
inline std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// True iff the edit distance is at most one, in linear time.
inline bool within_one_edit(std::u32string_view a, std::u32string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (a.size() - b.size() > 1) return false;
  std::size_t i = 0;
  while (i < b.size() && a[i] == b[i]) ++i;
  if (i == b.size()) return true;
  if (a.size() == b.size()) return a.substr(i + 1) == b.substr(i + 1);
  return a.substr(i + 1) == b.substr(i);
}

/// Token-level match rule: equal, or the pattern token has at least
/// kFuzzyMinLength code points and lies within one edit of the observed one.
inline bool fuzzy_match_token(std::string_view pattern_token,
                              std::string_view observed_token) {
  if (pattern_token == observed_token) return true;
  auto p = detail::to_code_points(pattern_token);
  if (p.size() < kFuzzyMinLength) return false;
  return within_one_edit(p, detail::to_code_points(observed_token));
}

}  // namespace cuebuddy
