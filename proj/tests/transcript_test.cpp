#include <random>

#include <gtest/gtest.h>

#include "cuebuddy/transcript.hpp"

using namespace cuebuddy;

namespace {

std::vector<std::string> words(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.normalized);
  return out;
}

}  // namespace

TEST(ParseTranscriptLine, FinalEvent) {
  auto e = parse_transcript_line("0\t2400\tfinal\t1\t0\tthe neural network is trained");
  EXPECT_EQ(e.start_ms, 0u);
  EXPECT_EQ(e.end_ms, 2400u);
  EXPECT_EQ(e.kind, EventKind::final);
  EXPECT_EQ(e.utterance_id, 1u);
  EXPECT_EQ(e.revision, 0u);
  EXPECT_EQ(e.text, "the neural network is trained");
}

TEST(ParseTranscriptLine, PartialEvent) {
  auto e = parse_transcript_line("0\t800\tpartial\t1\t0\tthe neural net\n");
  EXPECT_EQ(e.kind, EventKind::partial);
  EXPECT_EQ(e.utterance_id, 1u);
  EXPECT_EQ(e.text, "the neural net");
}

TEST(ParseTranscriptLine, RejectsMalformed) {
  EXPECT_THROW(parse_transcript_line("x\t800\tpartial\t1\t0\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("0\t800\tpartial\t1\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("0\t800\tdraft\t1\t0\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("0\t800\tfinal\t1\t0\thi\tthere"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("900\t800\tfinal\t1\t0\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("-1\t800\tfinal\t1\t0\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line("01\t800\tfinal\t1\t0\thi"), MalformedLine);
  EXPECT_THROW(parse_transcript_line(""), MalformedLine);
}

TEST(ParseTranscriptLine, EmptyTextAllowed) {
  auto e = parse_transcript_line("5\t5\tfinal\t2\t3\t");
  EXPECT_EQ(e.text, "");
  EXPECT_EQ(e.revision, 3u);
}

TEST(ParseTranscriptLine, RoundTripProperty) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> pieces = {"neural", " ", "Netz", "é", "的", "-", "!", "L2",
                                           "back-prop", "  ", "ü", "∑"};
  for (int i = 0; i < 1000; ++i) {
    TranscriptEvent e;
    e.start_ms = rng() % 1000000;
    e.end_ms = e.start_ms + rng() % 10000;
    e.kind = rng() % 2 ? EventKind::final : EventKind::partial;
    e.utterance_id = rng() % 5000;
    e.revision = rng() % 20;
    for (int k = static_cast<int>(rng() % 12); k > 0; --k) e.text += pieces[rng() % pieces.size()];
    const auto line = format_transcript_line(e);
    EXPECT_EQ(format_transcript_line(parse_transcript_line(line)), line);
    EXPECT_EQ(parse_transcript_line(line), e);
  }
}

TEST(NormalizeText, HyphenAndPunctuationSplit) {
  EXPECT_EQ(words(normalize_text("Back-Propagation!")),
            (std::vector<std::string>{"back", "propagation"}));
}

TEST(NormalizeText, Empty) { EXPECT_TRUE(normalize_text("").empty()); }

TEST(NormalizeText, WhitespaceCollapseKeepsOffsets) {
  const std::string text = "the Neural   Network";
  auto tokens = normalize_text(text);
  ASSERT_EQ(tokens.size(), 3u);
  EXPECT_EQ(words(tokens), (std::vector<std::string>{"the", "neural", "network"}));
  EXPECT_EQ(tokens[1].char_start, 4u);
  EXPECT_EQ(tokens[1].char_end, 10u);
  EXPECT_EQ(tokens[2].char_start, 13u);
  EXPECT_EQ(text.substr(tokens[2].char_start, tokens[2].char_end - tokens[2].char_start),
            "Network");
}

TEST(NormalizeText, DigitsAndAlphanumerics) {
  EXPECT_EQ(words(normalize_text("L2 norm of 3 vectors")),
            (std::vector<std::string>{"l2", "norm", "of", "3", "vectors"}));
}

TEST(NormalizeText, UnicodeFoldingAndComposition) {
  // "e" + combining acute composes to U+00E9; German sharp s folds to "ss".
  EXPECT_EQ(words(normalize_text("Café STRAßE")),
            (std::vector<std::string>{"café", "strasse"}));
}

TEST(NormalizeText, TimingInterpolatedByCharacter) {
  auto tokens = normalize_text("ab cd", 1000, 2000);
  ASSERT_EQ(tokens.size(), 2u);
  EXPECT_EQ(tokens[0].start_ms, 1000u);
  EXPECT_EQ(tokens[0].end_ms, 1400u);
  EXPECT_EQ(tokens[1].start_ms, 1600u);
  EXPECT_EQ(tokens[1].end_ms, 2000u);
}

TEST(NormalizeText, InvariantsProperty) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> pieces = {"Neural", " ", "NETWORK", "-", ",", "é", "Ω",
                                           "\t", "l2", "...", "Straße", "x́", "  ", "日本"};
  for (int i = 0; i < 500; ++i) {
    std::string text;
    for (int k = static_cast<int>(rng() % 15); k > 0; --k) text += pieces[rng() % pieces.size()];
    auto tokens = normalize_text(text);

    // Offsets are ordered, non-overlapping and reconstruct the text.
    std::string rebuilt;
    std::size_t cursor = 0;
    for (const auto& t : tokens) {
      ASSERT_GE(t.char_start, cursor);
      rebuilt += text.substr(cursor, t.char_start - cursor);
      rebuilt += t.surface;
      ASSERT_EQ(text.substr(t.char_start, t.char_end - t.char_start), t.surface);
      cursor = t.char_end;
      ASSERT_FALSE(t.normalized.empty());
      ASSERT_EQ(t.normalized.find(' '), std::string::npos);
    }
    rebuilt += text.substr(cursor);
    EXPECT_EQ(rebuilt, text);

    // Idempotent on its own output.
    std::string joined;
    for (const auto& t : tokens) joined += t.normalized + " ";
    EXPECT_EQ(words(normalize_text(joined)), words(tokens)) << text;
  }
}

TEST(SequenceEvents, RevisionReplacesHypothesis) {
  auto out = sequence_events({parse_transcript_line("0\t800\tpartial\t1\t0\tthe neural net"),
                              parse_transcript_line("0\t1200\tfinal\t1\t1\tthe neural network")});
  ASSERT_EQ(out.updates.size(), 2u);
  EXPECT_TRUE(out.rejections.empty());
  EXPECT_FALSE(out.updates[0].finalized);
  EXPECT_TRUE(out.updates[1].finalized);
  EXPECT_EQ(words(out.updates[1].tokens),
            (std::vector<std::string>{"the", "neural", "network"}));
}

TEST(SequenceEvents, EventAfterFinal) {
  auto out = sequence_events({parse_transcript_line("0\t800\tfinal\t1\t0\ta"),
                              parse_transcript_line("0\t900\tpartial\t1\t1\ta b")});
  ASSERT_EQ(out.updates.size(), 1u);
  ASSERT_EQ(out.rejections.size(), 1u);
  EXPECT_EQ(out.rejections[0].code, "EventAfterFinal");
}

TEST(SequenceEvents, UtteranceIdsNonDecreasing) {
  auto out = sequence_events({parse_transcript_line("0\t100\tfinal\t1\t0\ta"),
                              parse_transcript_line("100\t200\tfinal\t3\t0\tb"),
                              parse_transcript_line("200\t300\tfinal\t2\t0\tc")});
  ASSERT_EQ(out.updates.size(), 2u);
  ASSERT_EQ(out.rejections.size(), 1u);
  EXPECT_EQ(out.rejections[0].code, "OutOfOrderRevision");
}

TEST(SequenceEvents, RevisionMustIncrease) {
  auto out = sequence_events({parse_transcript_line("0\t100\tpartial\t1\t2\ta"),
                              parse_transcript_line("0\t150\tpartial\t1\t2\ta b"),
                              parse_transcript_line("0\t150\tpartial\t1\t1\ta b"),
                              parse_transcript_line("0\t200\tfinal\t1\t3\ta b c")});
  EXPECT_EQ(out.updates.size(), 2u);
  EXPECT_EQ(out.rejections.size(), 2u);
}

TEST(SequenceEvents, NothingAfterFinalProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TranscriptEvent> events;
    for (int i = 0; i < 40; ++i) {
      TranscriptEvent e;
      e.utterance_id = rng() % 6;
      e.revision = rng() % 5;
      e.kind = rng() % 3 == 0 ? EventKind::final : EventKind::partial;
      e.text = "w";
      events.push_back(e);
    }
    std::set<std::uint64_t> finalized;
    std::uint64_t last_utt = 0;
    for (const auto& u : sequence_events(events).updates) {
      EXPECT_FALSE(finalized.count(u.utterance_id));
      EXPECT_GE(u.utterance_id, last_utt);
      last_utt = u.utterance_id;
      if (u.finalized) finalized.insert(u.utterance_id);
    }
  }
}
