#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cuebuddy/automaton.hpp"
#include "cuebuddy/error.hpp"
#include "cuebuddy/transcript.hpp"

namespace cuebuddy {

/// One emitted cue as recorded in a session's cue log:
/// `emit_ms<TAB>term_id<TAB>canonical<TAB>utterance_id<TAB>first_token<TAB>last_token<TAB>exact|fuzzy`
struct CueLogRecord {
  std::uint64_t emit_ms = 0;
  TermId term_id = 0;
  std::string canonical;
  std::uint64_t utterance_id = 0;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
  bool exact = true;

  bool operator==(const CueLogRecord&) const = default;
};

inline std::string format_cue_log_line(const CueLogRecord& r) {
  std::string canonical = r.canonical;
  for (auto& c : canonical)
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  return std::to_string(r.emit_ms) + '\t' + std::to_string(r.term_id) + '\t' + canonical +
         '\t' + std::to_string(r.utterance_id) + '\t' + std::to_string(r.first_token) + '\t' +
         std::to_string(r.last_token) + '\t' + (r.exact ? "exact" : "fuzzy");
}

inline CueLogRecord parse_cue_log_line(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  std::vector<std::string_view> f;
  std::size_t pos = 0;
  for (;;) {
    auto tab = line.find('\t', pos);
    f.push_back(line.substr(pos, tab == std::string_view::npos ? tab : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  if (f.size() != 7) throw MalformedLine("cue log line needs 7 fields");
  auto num = [&](std::size_t i) {
    auto v = detail::parse_canonical_uint(f[i]);
    if (!v) throw MalformedLine("non-numeric cue log field " + std::to_string(i + 1));
    return *v;
  };
  CueLogRecord r;
  r.emit_ms = num(0);
  r.term_id = static_cast<TermId>(num(1));
  r.canonical = std::string(f[2]);
  r.utterance_id = num(3);
  r.first_token = num(4);
  r.last_token = num(5);
  if (f[6] == "exact")
    r.exact = true;
  else if (f[6] == "fuzzy")
    r.exact = false;
  else
    throw MalformedLine("match kind must be exact or fuzzy");
  return r;
}

}  // namespace cuebuddy
