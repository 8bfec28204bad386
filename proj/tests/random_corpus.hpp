#pragma once

// Seeded random dictionaries and texts for matcher property tests.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "cuebuddy/automaton.hpp"
#include "oracle.hpp"

namespace testing_corpus {

struct Corpus {
  std::vector<cuebuddy::TermPattern> patterns;
  std::vector<oracle::Pattern> oracle_patterns;
  std::vector<std::string> text;
};

inline std::string random_word(std::mt19937_64& rng) {
  // Small alphabet and short words so collisions and near-misses are common.
  static const std::string letters = "abcdeilnorst";
  std::size_t len = 3 + rng() % 8;
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += letters[rng() % letters.size()];
  return w;
}

/// One random edit (substitute, insert, delete) of `w`.
inline std::string corrupt(std::mt19937_64& rng, std::string w) {
  static const std::string letters = "abcdeilnorst";
  std::size_t pos = rng() % (w.size() + 1);
  switch (rng() % 3) {
    case 0:
      if (pos < w.size()) w[pos] = letters[rng() % letters.size()];
      break;
    case 1:
      w.insert(w.begin() + static_cast<long>(pos), letters[rng() % letters.size()]);
      break;
    default:
      if (pos < w.size() && w.size() > 1) w.erase(pos, 1);
      break;
  }
  return w;
}

/// Up to `max_patterns` patterns of 1-4 tokens over a shared vocabulary
/// (some terms get a second alias), and a text of up to `max_tokens` tokens
/// mixing vocabulary words, corrupted words and planted pattern occurrences.
inline Corpus random_corpus(std::mt19937_64& rng, std::size_t max_patterns,
                            std::size_t max_tokens) {
  Corpus c;
  std::vector<std::string> vocab;
  const std::size_t vocab_size = 10 + rng() % 60;
  for (std::size_t i = 0; i < vocab_size; ++i) vocab.push_back(random_word(rng));

  const std::size_t n_patterns = 1 + rng() % max_patterns;
  std::set<std::vector<std::string>> seen;
  cuebuddy::TermId next_term = 0;
  for (std::size_t i = 0; i < n_patterns; ++i) {
    std::vector<std::string> tokens;
    const std::size_t len = 1 + rng() % 4;
    for (std::size_t k = 0; k < len; ++k) tokens.push_back(vocab[rng() % vocab.size()]);
    if (!seen.insert(tokens).second) continue;
    // Occasionally reuse the previous term id: an alias.
    cuebuddy::TermId id = (next_term > 0 && rng() % 5 == 0) ? next_term - 1 : next_term++;
    c.patterns.push_back(cuebuddy::TermPattern::make(id, "t" + std::to_string(id), tokens));
    c.oracle_patterns.push_back({id, tokens});
  }

  const std::size_t n_tokens = rng() % (max_tokens + 1);
  while (c.text.size() < n_tokens) {
    switch (rng() % 4) {
      case 0: {
        const auto& p = c.patterns[rng() % c.patterns.size()].token_seq;
        for (const auto& t : p) c.text.push_back(rng() % 6 == 0 ? corrupt(rng, t) : t);
        break;
      }
      case 1:
        c.text.push_back(corrupt(rng, vocab[rng() % vocab.size()]));
        break;
      default:
        c.text.push_back(vocab[rng() % vocab.size()]);
        break;
    }
  }
  c.text.resize(n_tokens);
  return c;
}

}  // namespace testing_corpus
