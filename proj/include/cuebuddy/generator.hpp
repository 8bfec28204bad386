#pragma once

#include <algorithm>
#include <chrono>
#include <csignal>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "cuebuddy/error.hpp"
#include "cuebuddy/glossary.hpp"

namespace cuebuddy {

/// Explanations an adapter produced, keyed by language code.
using ExplanationMap = std::map<std::string, std::string>;

/// Source of short multilingual explanations for a term, such as a language
/// model behind a local process. Implementations throw AdapterUnavailable,
/// AdapterTimeout or MalformedAdapterReply.
class GeneratorAdapter {
 public:
  virtual ~GeneratorAdapter() = default;
  virtual ExplanationMap generate(const std::string& term,
                                  const std::vector<std::string>& languages,
                                  std::chrono::milliseconds deadline) = 0;
};

/// Replies from a fixed script: (term, language) -> text.
class ScriptedAdapter : public GeneratorAdapter {
 public:
  void set_reply(const std::string& term, const std::string& language, std::string text) {
    replies_[term][language] = std::move(text);
  }
  void set_available(bool available) { available_ = available; }
  /// Simulated response time, compared against the caller's deadline.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  ExplanationMap generate(const std::string& term, const std::vector<std::string>& languages,
                          std::chrono::milliseconds deadline) override {
    if (!available_) throw AdapterUnavailable("scripted adapter is offline");
    if (latency_ > deadline)
      throw AdapterTimeout("no reply within " + std::to_string(deadline.count()) + " ms");
    ExplanationMap out;
    auto it = replies_.find(term);
    if (it == replies_.end()) return out;
    for (const auto& lang : languages)
      if (auto r = it->second.find(lang); r != it->second.end()) out[lang] = r->second;
    return out;
  }

 private:
  std::map<std::string, ExplanationMap> replies_;
  bool available_ = true;
  std::chrono::milliseconds latency_{0};
};

/// Talks to a child process over stdin/stdout, one JSON message per line.
///
///   request:  {"term":"backpropagation","languages":["hi","sw"]}
///   response: {"hi":"...","sw":"..."}
///
/// The child is started lazily and restarted after a timeout or crash.
class ProcessAdapter : public GeneratorAdapter {
 public:
  explicit ProcessAdapter(std::string command) : command_(std::move(command)) {
    std::signal(SIGPIPE, SIG_IGN);
  }
  ~ProcessAdapter() override { stop(); }

  ProcessAdapter(const ProcessAdapter&) = delete;
  ProcessAdapter& operator=(const ProcessAdapter&) = delete;

  ExplanationMap generate(const std::string& term, const std::vector<std::string>& languages,
                          std::chrono::milliseconds deadline) override {
    if (pid_ < 0) start();
    nlohmann::json request{{"term", term}, {"languages", languages}};
    std::string line = request.dump() + "\n";
    if (!write_all(line)) {
      stop();
      throw AdapterUnavailable("generator process closed its input");
    }
    auto reply = read_line(deadline);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(reply);
    } catch (const nlohmann::json::parse_error&) {
      throw MalformedAdapterReply("reply is not JSON: " + reply.substr(0, 80));
    }
    if (!j.is_object()) throw MalformedAdapterReply("reply is not a JSON object");
    ExplanationMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!it.value().is_string())
        throw MalformedAdapterReply("explanation for '" + it.key() + "' is not a string");
      out[it.key()] = it.value().get<std::string>();
    }
    return out;
  }

 private:
  void start() {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0) throw AdapterUnavailable("pipe() failed");
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw AdapterUnavailable("pipe() failed");
    }
    pid_t pid = fork();
    if (pid < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      throw AdapterUnavailable("fork() failed");
    }
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) close(fd);
      execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    pid_ = pid;
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    buffer_.clear();
  }

  void stop() {
    if (in_fd_ >= 0) close(in_fd_);
    if (out_fd_ >= 0) close(out_fd_);
    in_fd_ = out_fd_ = -1;
    if (pid_ > 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, nullptr, 0);
    }
    pid_ = -1;
  }

  bool write_all(const std::string& data) {
    std::size_t done = 0;
    while (done < data.size()) {
      auto n = write(in_fd_, data.data() + done, data.size() - done);
      if (n <= 0) return false;
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  std::string read_line(std::chrono::milliseconds deadline) {
    const auto until = std::chrono::steady_clock::now() + deadline;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          until - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        stop();
        throw AdapterTimeout("no reply within " + std::to_string(deadline.count()) + " ms");
      }
      pollfd p{out_fd_, POLLIN, 0};
      int ready = poll(&p, 1, static_cast<int>(left.count()));
      if (ready <= 0) continue;
      char chunk[4096];
      auto n = read(out_fd_, chunk, sizeof chunk);
      if (n <= 0) {
        stop();
        throw AdapterUnavailable("generator process exited");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::string command_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

struct GenerationResult {
  GlossaryEntry entry;                 // term plus the explanations that came back
  std::vector<std::string> missing;    // requested languages with no usable text
  std::vector<Diagnostic> diagnostics;
};

/// Asks the adapter for explanations of `term`. Languages the adapter does
/// not answer, or answers with blank text, are reported as missing rather
/// than filled in. Adapter errors propagate and nothing is returned.
inline GenerationResult generate_explanations(GeneratorAdapter& adapter, const std::string& term,
                                              const std::vector<std::string>& languages,
                                              std::chrono::milliseconds deadline =
                                                  std::chrono::seconds(30)) {
  if (languages.empty()) throw InvalidConfig("no languages requested");
  for (const auto& lang : languages)
    if (!is_valid_language_code(lang)) throw InvalidLanguage("'" + lang + "'");

  auto reply = adapter.generate(term, languages, deadline);
  GenerationResult r;
  r.entry.term = term;
  const std::set<std::string> wanted(languages.begin(), languages.end());
  for (const auto& lang : languages) {
    auto it = reply.find(lang);
    if (it == reply.end()) {
      r.missing.push_back(lang);
      r.diagnostics.push_back({"MissingLanguage", 0, "no '" + lang + "' explanation for '" + term + "'"});
    } else if (it->second.find_first_not_of(" \t\r\n") == std::string::npos) {
      r.missing.push_back(lang);
      r.diagnostics.push_back({"EmptyExplanation", 0, "'" + term + "' [" + lang + "]"});
    } else {
      r.entry.explanations[lang] = it->second;
    }
  }
  for (const auto& [lang, text] : reply)
    if (!wanted.count(lang))
      r.diagnostics.push_back({"UnrequestedLanguage", 0, "ignored '" + lang + "' for '" + term + "'"});
  return r;
}

/// Merges generated explanations into `entries`: new languages are added to
/// an existing entry with the same normalized term, otherwise a new entry is
/// appended. Existing explanations are never overwritten. If the merged
/// glossary would not validate, `entries` is left untouched and the
/// diagnostics are returned.
inline std::vector<Diagnostic> merge_generated(std::vector<GlossaryEntry>& entries,
                                               const GenerationResult& generated) {
  if (generated.entry.explanations.empty())
    return {{"NothingToMerge", 0, "no explanations generated for '" + generated.entry.term + "'"}};
  auto merged = entries;
  const auto key = normalized_key(generated.entry.term);
  auto it = std::find_if(merged.begin(), merged.end(),
                         [&](const GlossaryEntry& e) { return normalized_key(e.term) == key; });
  if (it == merged.end()) {
    merged.push_back(generated.entry);
  } else {
    for (const auto& [lang, text] : generated.entry.explanations) it->explanations.emplace(lang, text);
  }
  auto diagnostics = validate_glossary(merged);
  if (diagnostics.empty()) entries = std::move(merged);
  return diagnostics;
}

}  // namespace cuebuddy
