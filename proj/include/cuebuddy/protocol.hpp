#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "cuebuddy/error.hpp"
#include "cuebuddy/session.hpp"

// Subscriber and ingest wire messages: one JSON object per line/frame.
namespace cuebuddy::protocol {

using nlohmann::json;

inline json to_json(const OutboundMessage& m) {
  switch (m.type) {
    case OutboundMessage::Type::gap:
      return {{"type", "gap"}, {"next_cue_id", m.next_cue_id}};
    case OutboundMessage::Type::retract:
      return {{"type", "retract"}, {"cue_id", m.cue.cue_id}, {"term_id", m.cue.term_id}};
    case OutboundMessage::Type::cue:
      break;
  }
  json j{{"type", "cue"},
         {"cue_id", m.cue.cue_id},
         {"term_id", m.cue.term_id},
         {"canonical", m.cue.canonical},
         {"start_ms", m.cue.start_ms},
         {"end_ms", m.cue.end_ms},
         {"lang_used", nullptr},
         {"fallback", to_string(m.rendered.fallback)},
         {"explanation", m.rendered.explanation},
         {"utterance_id", m.cue.utterance_id},
         {"first_token", m.cue.first_token},
         {"last_token", m.cue.last_token},
         {"exact", m.cue.exact}};
  if (!m.rendered.language_used.empty()) j["lang_used"] = m.rendered.language_used;
  return j;
}

inline std::string serialize(const OutboundMessage& m) { return to_json(m).dump(); }

inline json welcome(const std::string& session_id, const std::string& client_id,
                    const std::string& language) {
  return {{"type", "welcome"},
          {"session_id", session_id},
          {"client_id", client_id},
          {"lang", language}};
}

inline json suppressed(TermId term_id, bool added) {
  return {{"type", "suppressed"}, {"term_id", term_id}, {"added", added}};
}

inline json error(const std::string& code, const std::string& detail) {
  return {{"type", "error"}, {"error", code}, {"detail", detail}};
}

inline json ack(const IngestAck& a) {
  if (!a.accepted)
    return {{"type", "rejected"},
            {"utterance_id", a.utterance_id},
            {"revision", a.revision},
            {"error", a.error},
            {"detail", a.detail}};
  return {{"type", "ack"},
          {"utterance_id", a.utterance_id},
          {"revision", a.revision},
          {"cues", a.cues},
          {"retractions", a.retractions},
          {"cue_ids", a.cue_ids}};
}

struct Hello {
  std::string lang;
  std::optional<std::uint64_t> resume_from;
};

struct Suppress {
  TermId term_id = 0;
};

/// Client message; throws Error("BadMessage") for anything unrecognized.
inline std::variant<Hello, Suppress> parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw Error("BadMessage", "not JSON");
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw Error("BadMessage", "missing 'type'");
  const auto type = j["type"].get<std::string>();
  if (type == "hello") {
    Hello h;
    if (!j.contains("lang") || !j["lang"].is_string()) throw Error("BadMessage", "hello needs 'lang'");
    h.lang = j["lang"].get<std::string>();
    if (j.contains("resume_from") && !j["resume_from"].is_null()) {
      if (!j["resume_from"].is_number_unsigned())
        throw Error("BadMessage", "'resume_from' must be a cue id or null");
      h.resume_from = j["resume_from"].get<std::uint64_t>();
    }
    return h;
  }
  if (type == "suppress") {
    if (!j.contains("term_id") || !j["term_id"].is_number_unsigned())
      throw Error("BadMessage", "suppress needs 'term_id'");
    return Suppress{j["term_id"].get<TermId>()};
  }
  throw Error("BadMessage", "unknown message type '" + type + "'");
}

/// Session config body for `POST /sessions`. Missing fields keep the values
/// in `defaults`.
inline SessionConfig parse_session_config(std::string_view body, SessionConfig defaults = {}) {
  SessionConfig c = std::move(defaults);
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return c;
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw InvalidConfig("session config is not JSON");
  }
  if (!j.is_object()) throw InvalidConfig("session config must be an object");
  if (j.contains("glossary")) {
    if (!j["glossary"].is_string()) throw InvalidConfig("'glossary' must be a string");
    c.glossary = j["glossary"].get<std::string>();
  }
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw InvalidConfig("'mode' must be a string");
    c.mode = parse_mode(j["mode"].get<std::string>());
  }
  if (j.contains("cooldown_ms")) {
    if (!j["cooldown_ms"].is_number_integer()) throw InvalidConfig("'cooldown_ms' must be an integer");
    c.cooldown_ms = j["cooldown_ms"].get<std::int64_t>();
  }
  return c;
}

}  // namespace cuebuddy::protocol
