#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cuebuddy/automaton.hpp"
#include "cuebuddy/transcript.hpp"

namespace cuebuddy {

enum class SpotMode { finals_only, eager };

inline std::string_view to_string(SpotMode mode) {
  return mode == SpotMode::eager ? "eager" : "finals";
}

/// A resolved term occurrence inside one utterance.
struct Match {
  TermId term_id = 0;
  std::uint64_t utterance_id = 0;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  bool exact = true;

  bool same_span(const Match& o) const {
    return term_id == o.term_id && utterance_id == o.utterance_id &&
           first_token == o.first_token && last_token == o.last_token;
  }
  bool operator==(const Match&) const = default;
};

/// Runs the automaton over one token sequence and applies leftmost-longest
/// selection.
inline std::vector<Match> match_tokens(const TokenAutomaton& automaton,
                                       const std::vector<Token>& tokens,
                                       std::uint64_t utterance_id = 0) {
  std::vector<Candidate> candidates;
  auto cursor = automaton.cursor();
  for (const auto& t : tokens) cursor.step(t.normalized, candidates);
  std::vector<Match> out;
  for (const auto& c : select_leftmost_longest(std::move(candidates))) {
    out.push_back({c.term_id, utterance_id, c.first, c.last,
                   tokens[c.first].start_ms, tokens[c.last].end_ms, c.exact});
  }
  return out;
}

struct SpotEvent {
  enum class Kind { match, retraction } kind = Kind::match;
  Match match;
};

/// Per-session streaming matcher. In finals_only mode every finalized
/// utterance yields its matches exactly once and partials yield nothing. In
/// eager mode each revision is matched; spans new to the utterance are
/// reported as matches and previously reported spans that disappear are
/// reported as retractions.
class StreamingSpotter {
 public:
  StreamingSpotter(const TokenAutomaton& automaton, SpotMode mode)
      : automaton_(&automaton), mode_(mode) {}

  std::vector<SpotEvent> feed(const UtteranceUpdate& update) {
    std::vector<SpotEvent> out;
    if (mode_ == SpotMode::finals_only) {
      if (!update.finalized) return out;
      for (auto& m : match_tokens(*automaton_, update.tokens, update.utterance_id))
        out.push_back({SpotEvent::Kind::match, std::move(m)});
      return out;
    }

    if (update.utterance_id != tracked_utterance_) {
      tracked_utterance_ = update.utterance_id;
      reported_.clear();
    }
    auto current = match_tokens(*automaton_, update.tokens, update.utterance_id);
    auto contains = [](const std::vector<Match>& set, const Match& m) {
      for (const auto& x : set)
        if (x.same_span(m)) return true;
      return false;
    };
    std::vector<Match> kept;
    for (const auto& old : reported_) {
      if (contains(current, old))
        kept.push_back(old);
      else
        out.push_back({SpotEvent::Kind::retraction, old});
    }
    for (const auto& m : current) {
      if (contains(reported_, m)) continue;
      out.push_back({SpotEvent::Kind::match, m});
      kept.push_back(m);
    }
    reported_ = std::move(kept);
    if (update.finalized) reported_.clear();
    return out;
  }

  SpotMode mode() const { return mode_; }

 private:
  const TokenAutomaton* automaton_;
  SpotMode mode_;
  std::uint64_t tracked_utterance_ = ~std::uint64_t{0};
  std::vector<Match> reported_;
};

inline constexpr std::uint64_t kDefaultCooldownMs = 120000;

/// Last emission time per (session, term).
struct CooldownLedger {
  std::uint64_t cooldown_ms = kDefaultCooldownMs;
  std::map<std::pair<std::string, TermId>, std::uint64_t> last_emit_ms;
};

enum class CooldownVerdict { Emit, Suppressed };

/// Emit iff the term has not been emitted in this session during the last
/// `cooldown_ms`. Records the emission on Emit.
inline CooldownVerdict apply_cooldown(CooldownLedger& ledger, const std::string& session_id,
                                      TermId term_id, std::uint64_t now_ms) {
  auto key = std::make_pair(session_id, term_id);
  auto it = ledger.last_emit_ms.find(key);
  if (it != ledger.last_emit_ms.end() && now_ms < it->second + ledger.cooldown_ms)
    return CooldownVerdict::Suppressed;
  ledger.last_emit_ms[key] = now_ms;
  return CooldownVerdict::Emit;
}

}  // namespace cuebuddy
