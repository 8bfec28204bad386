#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cuebuddy/error.hpp"
#include "cuebuddy/transcript.hpp"
#include "cuebuddy/unicode.hpp"

namespace cuebuddy {

/// Relative corpus frequency of normalized tokens.
using BackgroundFrequencies = std::unordered_map<std::string, double>;

/// Parses `token<TAB>relative_frequency` lines. Frequencies must be positive.
inline BackgroundFrequencies parse_background(std::istream& in) {
  BackgroundFrequencies out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(n, "expected token<TAB>frequency");
    std::string_view value(line.data() + tab + 1, line.size() - tab - 1);
    double f = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), f);
    if (ec != std::errc{} || ptr != value.data() + value.size() || !(f > 0) || !std::isfinite(f))
      throw ParseError(n, "invalid frequency '" + std::string(value) + "'");
    out[unicode::fold_nfc(line.substr(0, tab))] = f;
  }
  return out;
}

inline BackgroundFrequencies load_background_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open background file '" + path + "'");
  return parse_background(in);
}

inline const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "a", "about", "above", "after", "again", "all", "also", "am", "an", "and", "any",
      "are", "as", "at", "be", "because", "been", "before", "being", "below", "between",
      "both", "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during",
      "each", "few", "for", "from", "further", "had", "has", "have", "having", "he", "her",
      "here", "hers", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its",
      "itself", "just", "let", "like", "me", "more", "most", "my", "no", "nor", "not", "now",
      "of", "off", "on", "once", "one", "only", "or", "other", "our", "out", "over", "own",
      "really", "right", "same", "she", "should", "so", "some", "such", "than", "that",
      "the", "their", "them", "then", "there", "these", "they", "this", "those", "through",
      "to", "too", "uh", "um", "under", "until", "up", "us", "very", "was", "we", "well",
      "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
      "would", "yeah", "you", "your", "okay", "ok", "get", "gets", "got", "going",
      "go", "see", "say", "said", "know", "think", "make", "makes", "way", "thing", "things"};
  return words;
}

struct DiscoveryOptions {
  std::size_t max_n = 3;
  /// Background frequency assumed for tokens absent from the table.
  double unknown_frequency = 1e-7;
  const std::set<std::string>* stopwords = &default_stopwords();
};

struct TermCandidate {
  std::string text;  // normalized tokens joined by single spaces
  double score = 0;
  std::size_t count = 0;

  bool operator==(const TermCandidate&) const = default;
};

/// Ranks n-grams (n = 1..max_n) of a transcript as glossary candidates.
///
/// score = count * ln(p_transcript / p_background), where p_transcript is the
/// n-gram's share of all n-gram windows of its order and p_background is the
/// product of its tokens' background frequencies. N-grams never cross segment
/// (utterance) boundaries; n-grams with a stopword at either edge are skipped
/// and only positive scores are kept. Ties break lexicographically.
inline std::vector<TermCandidate> discover_candidates(
    const std::vector<std::vector<std::string>>& segments,
    const BackgroundFrequencies& background, std::size_t top_k,
    const DiscoveryOptions& options = {}) {
  std::size_t total_tokens = 0;
  for (const auto& s : segments) total_tokens += s.size();
  if (total_tokens == 0) throw EmptyTranscript("transcript has no tokens");
  if (top_k == 0) return {};

  std::vector<std::size_t> windows(options.max_n + 1, 0);
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& seg : segments) {
    for (std::size_t n = 1; n <= options.max_n && n <= seg.size(); ++n) {
      windows[n] += seg.size() - n + 1;
      for (std::size_t i = 0; i + n <= seg.size(); ++i) {
        if (options.stopwords->count(seg[i]) || options.stopwords->count(seg[i + n - 1]))
          continue;
        ++counts[std::vector<std::string>(seg.begin() + static_cast<std::ptrdiff_t>(i),
                                          seg.begin() + static_cast<std::ptrdiff_t>(i + n))];
      }
    }
  }

  std::vector<TermCandidate> ranked;
  for (const auto& [gram, count] : counts) {
    double log_background = 0;
    std::string text;
    for (const auto& tok : gram) {
      auto it = background.find(tok);
      log_background += std::log(it == background.end() ? options.unknown_frequency : it->second);
      if (!text.empty()) text += ' ';
      text += tok;
    }
    const double log_transcript =
        std::log(static_cast<double>(count) / static_cast<double>(windows[gram.size()]));
    const double score = static_cast<double>(count) * (log_transcript - log_background);
    if (score > 0) ranked.push_back({std::move(text), score, count});
  }
  std::sort(ranked.begin(), ranked.end(), [](const TermCandidate& a, const TermCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.text < b.text;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  return ranked;
}

inline std::vector<TermCandidate> discover_candidates(const std::vector<std::string>& tokens,
                                                      const BackgroundFrequencies& background,
                                                      std::size_t top_k,
                                                      const DiscoveryOptions& options = {}) {
  return discover_candidates(std::vector<std::vector<std::string>>{tokens}, background, top_k,
                             options);
}

/// One token segment per finalized utterance, in stream order. Partials and
/// rejected events contribute nothing.
inline std::vector<std::vector<std::string>> final_segments(
    const std::vector<TranscriptEvent>& events) {
  std::vector<std::vector<std::string>> segments;
  for (auto& update : sequence_events(events).updates) {
    if (!update.finalized) continue;
    auto& seg = segments.emplace_back();
    for (auto& t : update.tokens) seg.push_back(std::move(t.normalized));
  }
  return segments;
}

}  // namespace cuebuddy
