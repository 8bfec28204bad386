#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cuebuddy/glossary.hpp"
#include "cuebuddy/transcript.hpp"

// Seeded synthetic glossaries and lecture transcripts for replay, benchmarks
// and end-to-end tests.
namespace cuebuddy::synthetic {

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {
      "the", "we", "now", "look", "at", "this", "so", "if", "you", "take", "a", "and",
      "then", "is", "of", "to", "in", "that", "it", "here", "what", "happens", "when",
      "our", "value", "small", "large", "step", "each", "time", "first", "next", "again",
      "example", "remember", "notice", "term", "result", "simple", "idea", "case", "slide",
      "question", "answer", "problem", "uh", "um", "okay", "right", "good", "because",
      "where", "from", "both", "side", "equation", "model", "data", "point", "number"};
  return words;
}

/// Pronounceable pseudo-words that never collide with filler words.
class WordMaker {
 public:
  explicit WordMaker(std::uint64_t seed) : rng_(seed) {}

  std::string make() {
    static const std::vector<std::string> syllables = {
        "ka", "lo", "mi", "tra", "zen", "phor", "quan", "tel", "vis", "nor", "bex",
        "dri", "gul", "hap", "jor", "ky", "mon", "pra", "rix", "sel", "tav", "ul",
        "vor", "wix", "yam", "zor", "cel", "dun", "fen", "gri"};
    for (;;) {
      std::string w;
      const int n = 2 + static_cast<int>(rng_() % 3);
      for (int i = 0; i < n; ++i) w += syllables[rng_() % syllables.size()];
      if (used_.insert(w).second) return w;
    }
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::set<std::string> used_;
};

/// `size` entries with 1-3 token terms, explanations in en/hi/sw, and an
/// occasional fused alias for multi-word terms.
inline std::vector<GlossaryEntry> make_glossary(std::size_t size, std::uint64_t seed) {
  WordMaker words(seed);
  auto& rng = words.rng();
  std::vector<GlossaryEntry> out;
  std::set<std::string> keys;
  while (out.size() < size) {
    GlossaryEntry e;
    const int n = 1 + static_cast<int>(rng() % 3);
    std::vector<std::string> parts;
    for (int i = 0; i < n; ++i) parts.push_back(words.make());
    e.term = detail::join(parts);
    if (!keys.insert(e.term).second) continue;
    if (n > 1 && rng() % 4 == 0) {
      std::string fused;
      for (const auto& p : parts) fused += p;
      if (keys.insert(fused).second) e.aliases.push_back(fused);
    }
    e.tags.push_back(rng() % 2 ? "ml" : "math");
    e.explanations["en"] = "an idea called " + e.term + " used in this course";
    e.explanations["hi"] = e.term + " ek vichar hai jo is course mein aata hai";
    if (rng() % 3) e.explanations["sw"] = e.term + " ni wazo linalotumika katika kozi hii";
    out.push_back(std::move(e));
  }
  return out;
}

struct LectureOptions {
  std::uint64_t duration_ms = 600000;
  double term_rate = 0.35;        // chance an utterance mentions a term
  double corruption_rate = 0.1;   // chance a mentioned long token gets one typo
  double partial_noise = 0.3;     // chance a partial hypothesis has a wrong word
  std::uint64_t first_utterance = 1;
};

/// A lecture as a stream of partial and final events. Terms are drawn from
/// `terms`; utterances last 2-6 s with small pauses between them.
inline std::vector<TranscriptEvent> make_lecture(const std::vector<std::string>& terms,
                                                 std::uint64_t seed,
                                                 const LectureOptions& options = {}) {
  std::mt19937_64 rng(seed);
  const auto& filler = filler_words();
  auto corrupt = [&](std::string word) {
    if (word.size() < 6) return word;
    const auto pos = 1 + rng() % (word.size() - 2);
    switch (rng() % 3) {
      case 0: word[pos] = word[pos] == 'a' ? 'e' : 'a'; break;
      case 1: word.erase(pos, 1); break;
      default: word.insert(pos, 1, 'o'); break;
    }
    return word;
  };

  std::vector<TranscriptEvent> events;
  std::uint64_t t = 0;
  std::uint64_t utterance = options.first_utterance;
  while (t < options.duration_ms) {
    std::vector<std::string> words;
    const int n = 6 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) words.push_back(filler[rng() % filler.size()]);
    for (int mention = 0; mention < 2; ++mention) {
      if (terms.empty() || std::uniform_real_distribution<>(0, 1)(rng) >= options.term_rate)
        break;
      auto tokens = normalized_tokens(terms[rng() % terms.size()]);
      if (std::uniform_real_distribution<>(0, 1)(rng) < options.corruption_rate) {
        auto& victim = tokens[rng() % tokens.size()];
        victim = corrupt(victim);
      }
      if (rng() % 5 == 0 && !tokens.empty()) tokens[0][0] = static_cast<char>(std::toupper(tokens[0][0]));
      const auto at = rng() % (words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), tokens.begin(), tokens.end());
    }
    std::string text = detail::join(words);
    if (rng() % 3 == 0) text += rng() % 2 ? "." : "?";

    const std::uint64_t duration = 2000 + rng() % 4000;
    const int partials = static_cast<int>(rng() % 3);
    std::uint64_t revision = 0;
    for (int p = 1; p <= partials; ++p) {
      std::vector<std::string> prefix(words.begin(),
                                      words.begin() + static_cast<std::ptrdiff_t>(
                                                          words.size() * static_cast<std::size_t>(p) /
                                                          static_cast<std::size_t>(partials + 1)));
      if (!prefix.empty() && std::uniform_real_distribution<>(0, 1)(rng) < options.partial_noise)
        prefix.back() = filler[rng() % filler.size()];
      TranscriptEvent e;
      e.utterance_id = utterance;
      e.revision = revision++;
      e.kind = EventKind::partial;
      e.start_ms = t;
      e.end_ms = t + duration * static_cast<std::uint64_t>(p) / static_cast<std::uint64_t>(partials + 1);
      e.text = detail::join(prefix);
      events.push_back(std::move(e));
    }
    TranscriptEvent e;
    e.utterance_id = utterance++;
    e.revision = revision;
    e.kind = EventKind::final;
    e.start_ms = t;
    e.end_ms = t + duration;
    e.text = std::move(text);
    events.push_back(std::move(e));
    t += duration + 200 + rng() % 800;
  }
  return events;
}

inline std::vector<std::string> terms_of(const std::vector<GlossaryEntry>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.term);
  return out;
}

}  // namespace cuebuddy::synthetic
