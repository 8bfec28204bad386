#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cuebuddy/automaton.hpp"
#include "cuebuddy/error.hpp"
#include "cuebuddy/transcript.hpp"

namespace cuebuddy {

/// One glossary record: a canonical term, alternate surface forms, subject
/// tags and short explanations keyed by BCP-47 language code. `scripts`
/// optionally annotates the writing system of an explanation and is carried
/// through untouched.
struct GlossaryEntry {
  std::string term;
  std::vector<std::string> aliases;
  std::vector<std::string> tags;
  std::map<std::string, std::string> explanations;
  std::map<std::string, std::string> scripts;

  bool operator==(const GlossaryEntry&) const = default;
};

/// Entries of a glossary file together with their 1-based source lines.
struct GlossaryFile {
  std::vector<GlossaryEntry> entries;
  std::vector<std::size_t> lines;
};

namespace detail {

inline std::vector<std::string> string_array(const nlohmann::json& j, const char* field,
                                             std::size_t line) {
  std::vector<std::string> out;
  if (!j.contains(field)) return out;
  const auto& a = j.at(field);
  if (!a.is_array()) throw ParseError(line, std::string("'") + field + "' must be an array");
  for (const auto& v : a) {
    if (!v.is_string())
      throw ParseError(line, std::string("'") + field + "' must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

inline std::map<std::string, std::string> string_map(const nlohmann::json& j,
                                                     const char* field, std::size_t line) {
  std::map<std::string, std::string> out;
  const auto& o = j.at(field);
  if (!o.is_object()) throw ParseError(line, std::string("'") + field + "' must be an object");
  for (auto it = o.begin(); it != o.end(); ++it) {
    if (!it.value().is_string())
      throw ParseError(line, std::string("'") + field + "." + it.key() + "' must be a string");
    out.emplace(it.key(), it.value().get<std::string>());
  }
  return out;
}

inline std::string ascii_lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string join(const std::vector<std::string>& parts, char sep = ' ') {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

/// Parses one JSON Lines record. Throws ParseError.
inline GlossaryEntry parse_glossary_entry(std::string_view line, std::size_t line_number = 1) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_number, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_number, "record must be a JSON object");
  if (!j.contains("term") || !j["term"].is_string())
    throw ParseError(line_number, "missing string field 'term'");
  if (!j.contains("explanations"))
    throw ParseError(line_number, "missing field 'explanations'");

  GlossaryEntry e;
  e.term = j["term"].get<std::string>();
  e.aliases = detail::string_array(j, "aliases", line_number);
  e.tags = detail::string_array(j, "tags", line_number);
  e.explanations = detail::string_map(j, "explanations", line_number);
  if (j.contains("scripts")) e.scripts = detail::string_map(j, "scripts", line_number);
  return e;
}

/// Canonical one-line serialization (no trailing newline). Field order is
/// term, aliases, tags, explanations, then scripts when present.
inline std::string serialize_glossary_entry(const GlossaryEntry& e) {
  nlohmann::ordered_json j;
  j["term"] = e.term;
  j["aliases"] = e.aliases;
  j["tags"] = e.tags;
  j["explanations"] = nlohmann::ordered_json::object();
  for (const auto& [lang, text] : e.explanations) j["explanations"][lang] = text;
  if (!e.scripts.empty()) {
    j["scripts"] = nlohmann::ordered_json::object();
    for (const auto& [lang, script] : e.scripts) j["scripts"][lang] = script;
  }
  return j.dump();
}

inline GlossaryFile parse_glossary(std::istream& in) {
  GlossaryFile file;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    file.entries.push_back(parse_glossary_entry(line, n));
    file.lines.push_back(n);
  }
  return file;
}

inline GlossaryFile parse_glossary(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_glossary(in);
}

inline GlossaryFile load_glossary_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("FileNotFound", "cannot open glossary file '" + path + "'");
  return parse_glossary(in);
}

inline std::string serialize_glossary(const std::vector<GlossaryEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += serialize_glossary_entry(e);
    out += '\n';
  }
  return out;
}

/// Well-formed language tag: a 2-3 or 5-8 letter primary subtag followed by
/// optional '-'-separated alphanumeric subtags of 1-8 characters.
inline bool is_valid_language_code(std::string_view code) {
  std::size_t pos = 0;
  bool primary = true;
  while (true) {
    auto dash = code.find('-', pos);
    auto sub = code.substr(pos, dash == std::string_view::npos ? std::string_view::npos
                                                                 : dash - pos);
    if (primary) {
      if (!((sub.size() >= 2 && sub.size() <= 3) || (sub.size() >= 5 && sub.size() <= 8)))
        return false;
      for (char c : sub)
        if (!std::isalpha(static_cast<unsigned char>(c))) return false;
      primary = false;
    } else {
      if (sub.empty() || sub.size() > 8) return false;
      for (char c : sub)
        if (!std::isalnum(static_cast<unsigned char>(c))) return false;
    }
    if (dash == std::string_view::npos) return true;
    pos = dash + 1;
  }
}

struct Diagnostic {
  std::string code;
  std::size_t line = 0;
  std::string message;

  std::string to_string() const {
    return "line " + std::to_string(line) + ": " + code + ": " + message;
  }
};

/// Normalized lookup key for a surface form: its tokens joined by spaces.
inline std::string normalized_key(std::string_view surface) {
  return detail::join(normalized_tokens(surface));
}

/// Content checks on a parsed glossary. An empty result means the file is valid.
inline std::vector<Diagnostic> validate_glossary(const GlossaryFile& file) {
  std::vector<Diagnostic> out;
  std::map<std::string, std::size_t> term_owner;   // normalized term -> entry index
  std::map<std::string, std::size_t> alias_owner;  // normalized alias -> entry index
  auto line_of = [&](std::size_t i) { return i < file.lines.size() ? file.lines[i] : i + 1; };

  for (std::size_t i = 0; i < file.entries.size(); ++i) {
    const auto& e = file.entries[i];
    const auto line = line_of(i);
    const auto key = normalized_key(e.term);
    if (key.empty()) {
      out.push_back({"EmptyTerm", line, "term '" + e.term + "' has no word characters"});
    } else if (auto [it, inserted] = term_owner.emplace(key, i); !inserted) {
      out.push_back({"DuplicateTerm", line,
                     "'" + e.term + "' duplicates the term on line " +
                         std::to_string(line_of(it->second)) + " ('" + key + "')"});
    }
    if (e.explanations.empty())
      out.push_back({"MissingExplanations", line, "'" + e.term + "' has no explanations"});

    std::map<std::string, std::string> seen_lower;
    for (const auto& [lang, text] : e.explanations) {
      if (!is_valid_language_code(lang))
        out.push_back({"InvalidLanguageCode", line, "'" + lang + "' in '" + e.term + "'"});
      else if (auto [it, inserted] = seen_lower.emplace(detail::ascii_lower(lang), lang);
               !inserted)
        out.push_back({"DuplicateLanguage", line,
                       "'" + lang + "' and '" + it->second + "' in '" + e.term + "'"});
      if (text.find_first_not_of(" \t\r\n") == std::string::npos)
        out.push_back({"EmptyExplanation", line, "'" + e.term + "' [" + lang + "]"});
    }
    for (const auto& [lang, script] : e.scripts)
      if (!e.explanations.count(lang))
        out.push_back({"OrphanScript", line,
                       "script annotation for '" + lang + "' without an explanation"});
  }

  // Aliases are checked once every canonical term is known.
  for (std::size_t i = 0; i < file.entries.size(); ++i) {
    const auto& e = file.entries[i];
    const auto line = line_of(i);
    for (const auto& alias : e.aliases) {
      const auto key = normalized_key(alias);
      if (key.empty()) {
        out.push_back({"EmptyAlias", line, "alias '" + alias + "' of '" + e.term + "'"});
        continue;
      }
      if (auto it = term_owner.find(key); it != term_owner.end() && it->second != i) {
        out.push_back({"AliasCollision", line,
                       "alias '" + alias + "' of '" + e.term + "' equals the term on line " +
                           std::to_string(line_of(it->second))});
        continue;
      }
      if (auto [it, inserted] = alias_owner.emplace(key, i); !inserted && it->second != i) {
        out.push_back({"AliasCollision", line,
                       "alias '" + alias + "' of '" + e.term + "' equals an alias on line " +
                           std::to_string(line_of(it->second))});
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Diagnostic& a, const Diagnostic& b) { return a.line < b.line; });
  return out;
}

inline std::vector<Diagnostic> validate_glossary(const std::vector<GlossaryEntry>& entries) {
  return validate_glossary(GlossaryFile{entries, {}});
}

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

enum class Fallback { none, english, term_only };

inline std::string_view to_string(Fallback f) {
  switch (f) {
    case Fallback::none: return "none";
    case Fallback::english: return "english";
    case Fallback::term_only: return "term_only";
  }
  return "none";
}

struct LookupResult {
  TermId term_id = 0;
  std::string canonical;
  std::string language_used;
  std::string explanation;
  Fallback fallback = Fallback::none;

  bool operator==(const LookupResult&) const = default;
};

/// Immutable, matcher-ready glossary. Term ids follow the sort order of the
/// normalized canonical terms, so compiling the same content always yields
/// the same ids and version.
class CompiledGlossary {
 public:
  struct Term {
    TermId id = 0;
    std::string key;  // normalized canonical
    GlossaryEntry entry;
    std::map<std::string, std::string> explanations;  // lowercased language codes
  };

  const std::string& version() const { return version_; }
  const std::vector<Term>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  const TokenAutomaton& automaton() const { return *automaton_; }
  const std::vector<TermPattern>& patterns() const { return automaton_->patterns(); }

  bool contains(TermId id) const { return id < terms_.size(); }

  const Term& term(TermId id) const {
    if (!contains(id)) throw UnknownTerm("no term with id " + std::to_string(id));
    return terms_[id];
  }

  /// Term ids that carry an explanation in `language` (lowercased).
  const std::vector<TermId>& terms_with_language(const std::string& language) const {
    static const std::vector<TermId> none;
    auto it = language_index_.find(detail::ascii_lower(language));
    return it == language_index_.end() ? none : it->second;
  }

  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    for (const auto& [lang, ids] : language_index_) out.push_back(lang);
    return out;
  }

  /// Resolves a surface form (canonical or alias) to its term id.
  std::optional<TermId> find(std::string_view surface) const {
    auto it = surface_index_.find(normalized_key(surface));
    if (it == surface_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Deterministic JSON rendering of the compiled artifact.
  std::string to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version_;
    j["terms"] = nlohmann::ordered_json::array();
    for (const auto& t : terms_) {
      nlohmann::ordered_json row;
      row["term_id"] = t.id;
      row["term"] = t.entry.term;
      row["key"] = t.key;
      row["tags"] = t.entry.tags;
      row["patterns"] = nlohmann::ordered_json::array();
      for (const auto& p : patterns())
        if (p.term_id == t.id) row["patterns"].push_back(p.token_seq);
      row["explanations"] = nlohmann::ordered_json::object();
      for (const auto& [lang, text] : t.explanations) row["explanations"][lang] = text;
      j["terms"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
  }

 private:
  friend CompiledGlossary compile_glossary(const std::vector<GlossaryEntry>& entries);

  std::string version_;
  std::vector<Term> terms_;
  std::shared_ptr<const TokenAutomaton> automaton_;
  std::map<std::string, std::vector<TermId>> language_index_;
  std::map<std::string, TermId> surface_index_;
};

/// Builds term ids, patterns (canonical plus aliases) and the automaton.
/// Throws InvalidGlossary for terms or aliases with no word characters and
/// DuplicatePattern when two terms share a token sequence.
inline CompiledGlossary compile_glossary(const std::vector<GlossaryEntry>& entries) {
  if (entries.empty()) throw EmptyPatternSet("glossary has no entries");
  std::vector<std::pair<std::string, const GlossaryEntry*>> keyed;
  for (const auto& e : entries) {
    auto key = normalized_key(e.term);
    if (key.empty()) throw InvalidGlossary("term '" + e.term + "' has no word characters");
    keyed.emplace_back(std::move(key), &e);
  }
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return a.second->term < b.second->term;
  });

  CompiledGlossary g;
  std::vector<TermPattern> patterns;
  std::string hashed;
  for (std::size_t i = 0; i < keyed.size(); ++i) {
    const auto id = static_cast<TermId>(i);
    const auto& e = *keyed[i].second;
    CompiledGlossary::Term t{id, keyed[i].first, e, {}};
    for (const auto& [lang, text] : e.explanations)
      t.explanations.emplace(detail::ascii_lower(lang), text);
    for (const auto& [lang, text] : t.explanations) g.language_index_[lang].push_back(id);

    patterns.push_back(TermPattern::make(id, e.term, normalized_tokens(e.term)));
    g.surface_index_.emplace(t.key, id);
    for (const auto& alias : e.aliases) {
      auto tokens = normalized_tokens(alias);
      if (tokens.empty())
        throw InvalidGlossary("alias '" + alias + "' of '" + e.term + "' has no word characters");
      g.surface_index_.emplace(detail::join(tokens), id);
      patterns.push_back(TermPattern::make(id, e.term, std::move(tokens)));
    }
    hashed += serialize_glossary_entry(e);
    hashed += '\n';
    g.terms_.push_back(std::move(t));
  }
  g.automaton_ = std::make_shared<const TokenAutomaton>(std::move(patterns));
  g.version_ = fnv1a_hex(hashed);
  return g;
}

inline CompiledGlossary compile_glossary(const GlossaryFile& file) {
  return compile_glossary(file.entries);
}

/// Explanation for a term in `language`, falling back to English and then
/// to the bare term. Throws UnknownTerm.
inline LookupResult lookup(const CompiledGlossary& glossary, TermId term_id,
                           const std::string& language) {
  const auto& t = glossary.term(term_id);
  LookupResult r;
  r.term_id = term_id;
  r.canonical = t.entry.term;
  const auto wanted = detail::ascii_lower(language);
  if (auto it = t.explanations.find(wanted); it != t.explanations.end()) {
    r.language_used = wanted;
    r.explanation = it->second;
    r.fallback = Fallback::none;
  } else if (auto en = t.explanations.find("en"); en != t.explanations.end()) {
    r.language_used = "en";
    r.explanation = en->second;
    r.fallback = Fallback::english;
  } else {
    r.language_used.clear();
    r.fallback = Fallback::term_only;
  }
  return r;
}

}  // namespace cuebuddy
