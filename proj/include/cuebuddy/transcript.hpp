#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cuebuddy/error.hpp"
#include "cuebuddy/unicode.hpp"

namespace cuebuddy {

enum class EventKind { partial, final };

inline std::string_view to_string(EventKind kind) {
  return kind == EventKind::final ? "final" : "partial";
}

/// One timestamped ASR hypothesis for an utterance. Revisions of the same
/// utterance fully replace each other.
struct TranscriptEvent {
  std::string session_id;
  std::uint64_t utterance_id = 0;
  std::uint64_t revision = 0;
  EventKind kind = EventKind::partial;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  std::string text;
  std::optional<double> confidence;

  bool operator==(const TranscriptEvent&) const = default;
};

struct Token {
  std::string surface;
  std::string normalized;
  std::size_t char_start = 0;  // byte offset into the utterance text
  std::size_t char_end = 0;    // one past the last byte
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  std::optional<double> confidence;

  bool operator==(const Token&) const = default;
};

namespace detail {

/// Canonical unsigned decimal: no sign, no leading zeros (except "0").
inline std::optional<std::uint64_t> parse_canonical_uint(std::string_view s) {
  if (s.empty() || (s.size() > 1 && s.front() == '0')) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace detail

/// Parses one line of the timed-transcript protocol:
/// `start_ms<TAB>end_ms<TAB>kind<TAB>utterance_id<TAB>revision<TAB>text`.
/// A trailing LF (or CRLF) is tolerated. Throws MalformedLine.
inline TranscriptEvent parse_transcript_line(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  std::string_view fields[6];
  std::size_t pos = 0;
  for (int i = 0; i < 5; ++i) {
    auto tab = line.find('\t', pos);
    if (tab == std::string_view::npos)
      throw MalformedLine("expected 6 tab-separated fields, got " +
                          std::to_string(i + 1));
    fields[i] = line.substr(pos, tab - pos);
    pos = tab + 1;
  }
  fields[5] = line.substr(pos);
  if (fields[5].find('\t') != std::string_view::npos)
    throw MalformedLine("tab inside text field");

  auto number = [&](int index, const char* name) {
    auto v = detail::parse_canonical_uint(fields[index]);
    if (!v)
      throw MalformedLine(std::string("non-numeric ") + name + ": '" +
                          std::string(fields[index]) + "'");
    return *v;
  };

  TranscriptEvent event;
  event.start_ms = number(0, "start_ms");
  event.end_ms = number(1, "end_ms");
  if (fields[2] == "partial")
    event.kind = EventKind::partial;
  else if (fields[2] == "final")
    event.kind = EventKind::final;
  else
    throw MalformedLine("unknown kind '" + std::string(fields[2]) + "'");
  event.utterance_id = number(3, "utterance_id");
  event.revision = number(4, "revision");
  if (event.end_ms < event.start_ms)
    throw MalformedLine("end_ms precedes start_ms");
  event.text = std::string(fields[5]);
  return event;
}

/// Inverse of parse_transcript_line, without the trailing LF.
inline std::string format_transcript_line(const TranscriptEvent& event) {
  std::string out;
  out += std::to_string(event.start_ms);
  out += '\t';
  out += std::to_string(event.end_ms);
  out += '\t';
  out += to_string(event.kind);
  out += '\t';
  out += std::to_string(event.utterance_id);
  out += '\t';
  out += std::to_string(event.revision);
  out += '\t';
  out += event.text;
  return out;
}

/// Splits `text` into normalized tokens. Separators are whitespace,
/// punctuation (hyphens included), symbols and controls; offsets index the
/// original bytes. Token timing is interpolated linearly by code-point
/// position between `start_ms` and `end_ms`.
inline std::vector<Token> normalize_text(std::string_view text,
                                         std::uint64_t start_ms = 0,
                                         std::uint64_t end_ms = 0) {
  struct Span {
    std::size_t byte_begin, byte_end, cp_begin, cp_end;
  };
  std::vector<Span> spans;
  std::size_t cp_index = 0;
  std::optional<Span> open;
  for (std::size_t pos = 0; pos < text.size(); ++cp_index) {
    auto cp = unicode::decode_at(text, pos);
    if (unicode::is_word_char(cp.value)) {
      if (!open) open = Span{pos, pos, cp_index, cp_index};
      open->byte_end = pos + cp.size;
      open->cp_end = cp_index + 1;
    } else if (open) {
      spans.push_back(*open);
      open.reset();
    }
    pos += cp.size;
  }
  if (open) spans.push_back(*open);

  const std::size_t total_cps = cp_index;
  const std::uint64_t duration = end_ms > start_ms ? end_ms - start_ms : 0;
  auto at = [&](std::size_t cp) {
    return start_ms + (total_cps == 0 ? 0 : duration * cp / total_cps);
  };

  std::vector<Token> tokens;
  tokens.reserve(spans.size());
  for (const auto& s : spans) {
    Token t;
    t.surface = std::string(text.substr(s.byte_begin, s.byte_end - s.byte_begin));
    t.normalized = unicode::fold_nfc(t.surface);
    t.char_start = s.byte_begin;
    t.char_end = s.byte_end;
    t.start_ms = at(s.cp_begin);
    t.end_ms = at(s.cp_end);
    tokens.push_back(std::move(t));
  }
  return tokens;
}

/// Normalized token strings only.
inline std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : normalize_text(text)) out.push_back(std::move(t.normalized));
  return out;
}

/// The utterance's current hypothesis after one accepted event.
struct UtteranceUpdate {
  std::uint64_t utterance_id = 0;
  std::uint64_t revision = 0;
  bool finalized = false;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  std::vector<Token> tokens;
};

struct Rejection {
  std::string code;  // "OutOfOrderRevision" or "EventAfterFinal"
  std::string message;
};

/// Enforces the per-session ordering rules on a transcript stream:
/// utterance ids never decrease, revisions strictly increase within an
/// utterance, and nothing follows an utterance's final event. Offending
/// events are rejected and the stream continues.
class EventSequencer {
 public:
  std::variant<UtteranceUpdate, Rejection> accept(const TranscriptEvent& event) {
    if (current_ && event.utterance_id < current_->utterance_id) {
      return Rejection{"OutOfOrderRevision",
                       "utterance " + std::to_string(event.utterance_id) +
                           " arrived after utterance " +
                           std::to_string(current_->utterance_id)};
    }
    if (current_ && event.utterance_id == current_->utterance_id) {
      if (current_->finalized) {
        return Rejection{"EventAfterFinal",
                         "utterance " + std::to_string(event.utterance_id) +
                             " already finalized"};
      }
      if (event.revision <= current_->revision) {
        return Rejection{"OutOfOrderRevision",
                         "revision " + std::to_string(event.revision) +
                             " not after " + std::to_string(current_->revision)};
      }
    }
    current_ = State{event.utterance_id, event.revision,
                     event.kind == EventKind::final};

    UtteranceUpdate update;
    update.utterance_id = event.utterance_id;
    update.revision = event.revision;
    update.finalized = event.kind == EventKind::final;
    update.start_ms = event.start_ms;
    update.end_ms = event.end_ms;
    update.tokens = normalize_text(event.text, event.start_ms, event.end_ms);
    if (event.confidence)
      for (auto& t : update.tokens) t.confidence = event.confidence;
    return update;
  }

 private:
  struct State {
    std::uint64_t utterance_id;
    std::uint64_t revision;
    bool finalized;
  };
  std::optional<State> current_;
};

/// Runs a whole event sequence through an EventSequencer.
struct SequencedStream {
  std::vector<UtteranceUpdate> updates;
  std::vector<Rejection> rejections;
};

inline SequencedStream sequence_events(const std::vector<TranscriptEvent>& events) {
  SequencedStream out;
  EventSequencer sequencer;
  for (const auto& e : events) {
    auto result = sequencer.accept(e);
    if (auto* u = std::get_if<UtteranceUpdate>(&result))
      out.updates.push_back(std::move(*u));
    else
      out.rejections.push_back(std::get<Rejection>(std::move(result)));
  }
  return out;
}

/// Reads a transcript file, one event per non-empty line. Malformed lines
/// are rethrown as MalformedLine with the line number prefixed.
inline std::vector<TranscriptEvent> read_transcript(std::istream& in) {
  std::vector<TranscriptEvent> events;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty() || line == "\r") continue;
    try {
      events.push_back(parse_transcript_line(line));
    } catch (const MalformedLine& e) {
      throw MalformedLine("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return events;
}

inline std::vector<TranscriptEvent> load_transcript_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open transcript '" + path + "'");
  return read_transcript(in);
}

}  // namespace cuebuddy
