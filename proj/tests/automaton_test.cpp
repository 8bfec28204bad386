#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "cuebuddy/automaton.hpp"
#include "cuebuddy/transcript.hpp"
#include "oracle.hpp"
#include "random_corpus.hpp"

using namespace cuebuddy;

namespace {

std::vector<Candidate> spot(const TokenAutomaton& a, const std::string& text) {
  return select_leftmost_longest(a.scan(normalized_tokens(text)));
}

}  // namespace

TEST(BuildAutomaton, NeuralNetworkAndBackpropagation) {
  auto a = build_automaton({TermPattern::make(0, "neural network", {"neural", "network"}),
                            TermPattern::make(1, "backpropagation", {"backpropagation"})});
  auto hits = spot(a, "the neural network uses backpropagation");
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].term_id, 0u);
  EXPECT_EQ(hits[0].first, 1u);
  EXPECT_EQ(hits[0].last, 2u);
  EXPECT_EQ(hits[1].term_id, 1u);
  // "the"=0 "neural"=1 "network"=2 "uses"=3 "backpropagation"=4
  EXPECT_EQ(hits[1].first, 4u);
  EXPECT_EQ(hits[1].last, 4u);
  EXPECT_TRUE(hits[0].exact && hits[1].exact);
}

TEST(BuildAutomaton, LeftmostLongest) {
  auto a = build_automaton({TermPattern::make(0, "network", {"network"}),
                            TermPattern::make(1, "neural network", {"neural", "network"})});
  auto hits = spot(a, "neural network");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].term_id, 1u);
  EXPECT_EQ(hits[0].first, 0u);
  EXPECT_EQ(hits[0].last, 1u);
}

TEST(BuildAutomaton, EarlierStartBeatsLongerOverlap) {
  auto a = build_automaton({TermPattern::make(0, "a b", {"alpha", "beta"}),
                            TermPattern::make(1, "b c d", {"beta", "gamma", "delta"})});
  auto hits = spot(a, "alpha beta gamma delta");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].term_id, 0u);
}

TEST(BuildAutomaton, ExactBeatsFuzzyOnSameRange) {
  auto a = build_automaton({TermPattern::make(0, "tensors", {"tensors"}),
                            TermPattern::make(1, "tensor", {"tensor"})});
  auto hits = spot(a, "tensor");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].term_id, 1u);
  EXPECT_TRUE(hits[0].exact);
}

TEST(BuildAutomaton, OneFuzzyTokenPerOccurrence) {
  auto a = build_automaton(
      {TermPattern::make(0, "gradient descent", {"gradient", "descent"})});
  EXPECT_EQ(spot(a, "gradient descnt").size(), 1u);
  EXPECT_FALSE(spot(a, "gradient descnt")[0].exact);
  EXPECT_EQ(spot(a, "gradeint descnt").size(), 0u);  // transposition is two edits
  EXPECT_EQ(spot(a, "gradint descnt").size(), 0u);   // two fuzzy tokens
}

TEST(BuildAutomaton, RejectsDuplicatesAcrossTerms) {
  EXPECT_THROW(build_automaton({TermPattern::make(0, "x", {"neural", "network"}),
                                TermPattern::make(1, "y", {"neural", "network"})}),
               DuplicatePattern);
  EXPECT_NO_THROW(build_automaton({TermPattern::make(0, "x", {"neural", "network"}),
                                   TermPattern::make(0, "x", {"neural", "network"})}));
  EXPECT_THROW(build_automaton({}), EmptyPatternSet);
  EXPECT_THROW(build_automaton({TermPattern::make(0, "x", {})}), InvalidPattern);
}

TEST(BuildAutomaton, CursorIsIncremental) {
  auto a = build_automaton({TermPattern::make(0, "neural network", {"neural", "network"})});
  auto cursor = a.cursor();
  std::vector<Candidate> out;
  cursor.step("neural", out);
  EXPECT_TRUE(out.empty());
  cursor.step("network", out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].first, 0u);
  EXPECT_EQ(cursor.position(), 2u);
}

// Random dictionaries against the sliding-window oracle.
TEST(BuildAutomaton, MatchesBruteForceOracle) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 60; ++trial) {
    auto corpus = testing_corpus::random_corpus(rng, 50, 2000);
    TokenAutomaton a(corpus.patterns);
    auto got = select_leftmost_longest(a.scan(corpus.text));
    auto want = oracle::leftmost_longest(oracle::all_hits(corpus.oracle_patterns, corpus.text),
                                         corpus.text.size());
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].term_id, want[i].term_id);
      EXPECT_EQ(got[i].first, want[i].first);
      EXPECT_EQ(got[i].last, want[i].last);
      EXPECT_EQ(got[i].exact, want[i].exact);
    }
  }
}

// The raw candidate sets agree too, before overlap resolution.
TEST(BuildAutomaton, CandidateSetEqualsOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    auto corpus = testing_corpus::random_corpus(rng, 30, 400);
    TokenAutomaton a(corpus.patterns);
    std::set<std::tuple<unsigned, std::size_t, std::size_t, bool>> got, want;
    for (const auto& c : a.scan(corpus.text)) got.insert({c.term_id, c.first, c.last, c.exact});
    for (const auto& h : oracle::all_hits(corpus.oracle_patterns, corpus.text))
      want.insert({h.term_id, h.first, h.last, h.exact});
    EXPECT_EQ(got, want) << "trial " << trial;
  }
}
