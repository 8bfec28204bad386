#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cuebuddy/cue_log.hpp"
#include "cuebuddy/error.hpp"
#include "cuebuddy/glossary.hpp"
#include "cuebuddy/spotter.hpp"
#include "cuebuddy/transcript.hpp"

namespace cuebuddy {

inline constexpr std::size_t kDefaultSubscriberQueue = 256;

struct SessionConfig {
  std::string glossary = "default";  // version hash or registered alias
  SpotMode mode = SpotMode::finals_only;
  std::int64_t cooldown_ms = static_cast<std::int64_t>(kDefaultCooldownMs);
};

inline SpotMode parse_mode(std::string_view s) {
  if (s == "finals" || s == "finals_only") return SpotMode::finals_only;
  if (s == "eager") return SpotMode::eager;
  throw InvalidConfig("mode must be 'finals' or 'eager', got '" + std::string(s) + "'");
}

/// A spotted term occurrence that passed cooldown, before per-recipient
/// rendering.
struct CueEvent {
  std::uint64_t cue_id = 0;
  TermId term_id = 0;
  std::string canonical;
  std::uint64_t utterance_id = 0;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  bool exact = true;
  std::uint64_t emit_ms = 0;
  bool retracted = false;

  CueLogRecord log_record() const {
    return {emit_ms, term_id, canonical, utterance_id, first_token, last_token, exact};
  }
};

/// What a subscriber's queue carries.
struct OutboundMessage {
  enum class Type { cue, gap, retract } type = Type::cue;
  CueEvent cue;           // cue and retract
  LookupResult rendered;  // cue only
  std::uint64_t next_cue_id = 0;  // gap only
};

/// One connected student. The outbound queue is bounded; when full the
/// oldest message is dropped and the next drain starts with a gap notice.
/// `suppressed` is owned by the session and only touched under its lock.
class Subscriber {
 public:
  Subscriber(std::string client_id, std::string language, std::uint64_t joined_ms,
             std::size_t capacity)
      : client_id_(std::move(client_id)),
        language_(std::move(language)),
        joined_ms_(joined_ms),
        capacity_(capacity == 0 ? 1 : capacity) {}

  const std::string& client_id() const { return client_id_; }
  const std::string& language() const { return language_; }
  std::uint64_t joined_ms() const { return joined_ms_; }

  /// Called (outside the queue lock) whenever a message is queued.
  void set_notify(std::function<void()> notify) {
    std::lock_guard lock(mutex_);
    notify_ = std::move(notify);
  }

  void push(OutboundMessage message) {
    std::function<void()> notify;
    {
      std::lock_guard lock(mutex_);
      if (closed_) return;
      if (queue_.size() >= capacity_) {
        const auto& oldest = queue_.front();
        if (oldest.type == OutboundMessage::Type::cue)
          last_dropped_ = std::max(last_dropped_, oldest.cue.cue_id);
        queue_.pop_front();
        gap_pending_ = true;
        ++dropped_;
      }
      queue_.push_back(std::move(message));
      notify = notify_;
    }
    ready_.notify_all();
    if (notify) notify();
  }

  /// Removes and returns everything queued, gap notice first if messages
  /// were dropped since the last drain.
  std::vector<OutboundMessage> drain() {
    std::lock_guard lock(mutex_);
    return drain_locked();
  }

  /// Like drain(), but waits up to `timeout` for at least one message.
  std::vector<OutboundMessage> drain_wait(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    ready_.wait_for(lock, timeout, [&] { return !queue_.empty() || gap_pending_ || closed_; });
    return drain_locked();
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    ready_.notify_all();
  }

  std::size_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

  std::set<TermId> suppressed;

 private:
  std::vector<OutboundMessage> drain_locked() {
    std::vector<OutboundMessage> out;
    if (gap_pending_) {
      OutboundMessage gap;
      gap.type = OutboundMessage::Type::gap;
      gap.next_cue_id = last_dropped_ + 1;
      out.push_back(gap);
      gap_pending_ = false;
    }
    for (auto& m : queue_) out.push_back(std::move(m));
    queue_.clear();
    return out;
  }

  std::string client_id_;
  std::string language_;
  std::uint64_t joined_ms_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<OutboundMessage> queue_;
  std::function<void()> notify_;
  bool gap_pending_ = false;
  bool closed_ = false;
  std::uint64_t last_dropped_ = 0;
  std::size_t dropped_ = 0;
};

/// Result of ingesting one transcript event.
struct IngestAck {
  bool accepted = false;
  std::uint64_t utterance_id = 0;
  std::uint64_t revision = 0;
  std::size_t cues = 0;
  std::size_t retractions = 0;
  std::vector<std::uint64_t> cue_ids;
  std::string error;  // rejection or parse error code when !accepted
  std::string detail;
  /// Time spent sequencing, spotting and applying cooldown, excluding lookup
  /// and fan-out to subscribers.
  std::chrono::nanoseconds engine_time{0};
};

/// One live lecture. All mutation goes through the session lock, so events,
/// subscriptions and suppressions are applied in a single serial order.
class Session {
 public:
  Session(std::string id, std::shared_ptr<const CompiledGlossary> glossary, SessionConfig config,
          std::optional<std::string> cue_log_path = std::nullopt)
      : id_(std::move(id)),
        glossary_(std::move(glossary)),
        config_(std::move(config)),
        spotter_(glossary_->automaton(), config_.mode) {
    if (config_.cooldown_ms < 0) throw InvalidConfig("cooldown_ms must be non-negative");
    ledger_.cooldown_ms = static_cast<std::uint64_t>(config_.cooldown_ms);
    if (cue_log_path) {
      cue_log_.open(*cue_log_path, std::ios::binary | std::ios::app);
      if (!cue_log_) throw Error("IoError", "cannot open cue log '" + *cue_log_path + "'");
      cue_log_path_ = *cue_log_path;
    }
  }

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return config_; }
  const CompiledGlossary& glossary() const { return *glossary_; }

  IngestAck ingest(const TranscriptEvent& event) {
    std::lock_guard lock(mutex_);
    const auto started = std::chrono::steady_clock::now();
    fanout_time_ = {};
    IngestAck ack;
    ack.utterance_id = event.utterance_id;
    ack.revision = event.revision;
    auto result = sequencer_.accept(event);
    if (auto* rejection = std::get_if<Rejection>(&result)) {
      ack.error = rejection->code;
      ack.detail = rejection->message;
      ++rejected_;
      return ack;
    }
    ack.accepted = true;
    ++accepted_;
    const auto& update = std::get<UtteranceUpdate>(result);
    clock_ms_ = std::max(clock_ms_, update.end_ms);

    for (auto& spot : spotter_.feed(update)) {
      const auto key = span_key(spot.match);
      if (spot.kind == SpotEvent::Kind::retraction) {
        auto it = open_spans_.find(key);
        if (it == open_spans_.end()) continue;
        retract(it->second);
        open_spans_.erase(it);
        ++ack.retractions;
        continue;
      }
      if (apply_cooldown(ledger_, id_, spot.match.term_id, clock_ms_) ==
          CooldownVerdict::Suppressed)
        continue;
      auto cue_id = emit(spot.match);
      if (config_.mode == SpotMode::eager) open_spans_[key] = cue_id;
      ack.cue_ids.push_back(cue_id);
      ++ack.cues;
    }
    if (update.finalized) open_spans_.clear();
    ack.engine_time = std::chrono::steady_clock::now() - started - fanout_time_;
    return ack;
  }

  /// Parses one protocol line and ingests it. Malformed lines are reported
  /// in the ack, never thrown.
  IngestAck ingest_line(std::string_view line) {
    TranscriptEvent event;
    try {
      event = parse_transcript_line(line);
    } catch (const MalformedLine& e) {
      IngestAck ack;
      ack.error = e.code();
      ack.detail = e.what();
      std::lock_guard lock(mutex_);
      ++rejected_;
      return ack;
    }
    event.session_id = id_;
    return ingest(event);
  }

  /// Registers a subscriber. With `resume_from`, every cue after that id is
  /// queued first, so the client sees history and live cues in one order.
  std::shared_ptr<Subscriber> subscribe(const std::string& language,
                                        std::optional<std::uint64_t> resume_from = std::nullopt,
                                        std::size_t capacity = kDefaultSubscriberQueue) {
    if (!is_valid_language_code(language))
      throw InvalidLanguage("'" + language + "' is not a language code");
    std::lock_guard lock(mutex_);
    auto sub = std::make_shared<Subscriber>("c" + std::to_string(++client_counter_), language,
                                            clock_ms_, capacity);
    if (resume_from) {
      for (const auto& cue : history_) {
        if (cue.cue_id <= *resume_from || cue.retracted) continue;
        sub->push(render(cue, *sub));
      }
    }
    subscribers_.emplace(sub->client_id(), sub);
    return sub;
  }

  void unsubscribe(const std::string& client_id) {
    std::shared_ptr<Subscriber> sub;
    {
      std::lock_guard lock(mutex_);
      auto it = subscribers_.find(client_id);
      if (it == subscribers_.end()) return;
      sub = it->second;
      subscribers_.erase(it);
    }
    sub->close();
  }

  /// Mutes a term for one client for the rest of the session. Idempotent;
  /// returns true when the term was newly added.
  bool suppress_term(const std::string& client_id, TermId term_id) {
    std::lock_guard lock(mutex_);
    auto it = subscribers_.find(client_id);
    if (it == subscribers_.end()) throw UnknownClient("no client '" + client_id + "'");
    if (!glossary_->contains(term_id))
      throw UnknownTerm("no term with id " + std::to_string(term_id));
    return it->second->suppressed.insert(term_id).second;
  }

  /// Exclusive right to feed this session's transcript.
  class IngestLease {
   public:
    explicit IngestLease(Session* s) : session_(s) {}
    IngestLease(IngestLease&& o) noexcept : session_(std::exchange(o.session_, nullptr)) {}
    IngestLease& operator=(IngestLease&&) = delete;
    ~IngestLease() {
      if (session_) session_->ingest_active_.store(false);
    }

   private:
    Session* session_;
  };

  IngestLease acquire_ingest() {
    bool expected = false;
    if (!ingest_active_.compare_exchange_strong(expected, true))
      throw SecondIngestRejected("session '" + id_ + "' already has an ingest stream");
    return IngestLease(this);
  }

  std::vector<CueEvent> cues() const {
    std::lock_guard lock(mutex_);
    return history_;
  }

  std::vector<CueLogRecord> cue_log() const {
    std::lock_guard lock(mutex_);
    std::vector<CueLogRecord> out;
    for (const auto& c : history_) out.push_back(c.log_record());
    return out;
  }

  std::size_t subscriber_count() const {
    std::lock_guard lock(mutex_);
    return subscribers_.size();
  }

  nlohmann::json status() const {
    std::lock_guard lock(mutex_);
    return {{"session_id", id_},
            {"glossary_version", glossary_->version()},
            {"mode", to_string(config_.mode)},
            {"cooldown_ms", config_.cooldown_ms},
            {"clock_ms", clock_ms_},
            {"cues", history_.size()},
            {"events_accepted", accepted_},
            {"events_rejected", rejected_},
            {"subscribers", subscribers_.size()},
            {"ingest_active", ingest_active_.load()},
            {"cue_log", cue_log_path_}};
  }

  void flush() {
    std::lock_guard lock(mutex_);
    if (cue_log_.is_open()) cue_log_.flush();
  }

  /// Closes every subscriber queue; used on shutdown.
  void close() {
    std::lock_guard lock(mutex_);
    for (auto& [id, sub] : subscribers_) sub->close();
    if (cue_log_.is_open()) cue_log_.flush();
  }

 private:
  using SpanKey = std::tuple<std::uint64_t, TermId, std::size_t, std::size_t>;

  static SpanKey span_key(const Match& m) {
    return {m.utterance_id, m.term_id, m.first_token, m.last_token};
  }

  OutboundMessage render(const CueEvent& cue, const Subscriber& sub) const {
    OutboundMessage m;
    m.type = OutboundMessage::Type::cue;
    m.cue = cue;
    m.rendered = lookup(*glossary_, cue.term_id, sub.language());
    return m;
  }

  std::uint64_t emit(const Match& match) {
    const auto started = std::chrono::steady_clock::now();
    CueEvent cue;
    cue.cue_id = ++last_cue_id_;
    cue.term_id = match.term_id;
    cue.canonical = glossary_->term(match.term_id).entry.term;
    cue.utterance_id = match.utterance_id;
    cue.first_token = match.first_token;
    cue.last_token = match.last_token;
    cue.start_ms = match.start_ms;
    cue.end_ms = match.end_ms;
    cue.exact = match.exact;
    cue.emit_ms = clock_ms_;
    history_.push_back(cue);

    std::map<std::string, LookupResult> rendered;  // per language, this cue only
    for (auto& [client, sub] : subscribers_) {
      if (sub->suppressed.count(cue.term_id)) continue;
      auto it = rendered.find(sub->language());
      if (it == rendered.end())
        it = rendered.emplace(sub->language(), lookup(*glossary_, cue.term_id, sub->language()))
                 .first;
      OutboundMessage m;
      m.type = OutboundMessage::Type::cue;
      m.cue = cue;
      m.rendered = it->second;
      sub->push(std::move(m));
    }
    // Logged after fan-out so the file never runs ahead of what was delivered.
    if (cue_log_.is_open()) {
      const auto line = format_cue_log_line(cue.log_record()) + '\n';
      cue_log_.write(line.data(), static_cast<std::streamsize>(line.size()));
      cue_log_.flush();
    }
    fanout_time_ += std::chrono::steady_clock::now() - started;
    return cue.cue_id;
  }

  void retract(std::uint64_t cue_id) {
    for (auto& c : history_) {
      if (c.cue_id != cue_id) continue;
      c.retracted = true;
      for (auto& [client, sub] : subscribers_) {
        if (sub->suppressed.count(c.term_id)) continue;
        OutboundMessage m;
        m.type = OutboundMessage::Type::retract;
        m.cue = c;
        sub->push(std::move(m));
      }
      return;
    }
  }

  std::string id_;
  std::shared_ptr<const CompiledGlossary> glossary_;
  SessionConfig config_;

  mutable std::mutex mutex_;
  EventSequencer sequencer_;
  StreamingSpotter spotter_;
  CooldownLedger ledger_;
  std::uint64_t clock_ms_ = 0;
  std::chrono::nanoseconds fanout_time_{0};
  std::uint64_t last_cue_id_ = 0;
  std::uint64_t client_counter_ = 0;
  std::size_t accepted_ = 0;
  std::size_t rejected_ = 0;
  std::vector<CueEvent> history_;
  std::map<SpanKey, std::uint64_t> open_spans_;  // eager mode: span -> cue id
  std::map<std::string, std::shared_ptr<Subscriber>> subscribers_;
  std::atomic<bool> ingest_active_{false};
  std::ofstream cue_log_;
  std::string cue_log_path_;
};

/// Glossaries and sessions hosted by one service process.
class SessionRegistry {
 public:
  explicit SessionRegistry(std::optional<std::string> log_dir = std::nullopt)
      : log_dir_(std::move(log_dir)) {}

  /// Registers a compiled glossary under its version hash (and optionally an
  /// alias such as "default"). Returns the version.
  std::string add_glossary(CompiledGlossary glossary, std::optional<std::string> alias = {}) {
    auto shared = std::make_shared<const CompiledGlossary>(std::move(glossary));
    std::lock_guard lock(mutex_);
    glossaries_[shared->version()] = shared;
    if (alias) glossaries_[*alias] = shared;
    return shared->version();
  }

  /// Parses, validates and compiles JSON Lines glossary text.
  std::string upload_glossary(std::string_view jsonl) {
    auto file = parse_glossary(jsonl);
    auto diagnostics = validate_glossary(file);
    if (!diagnostics.empty()) {
      std::string message;
      for (const auto& d : diagnostics) message += d.to_string() + "\n";
      throw InvalidGlossary(message);
    }
    return add_glossary(compile_glossary(file));
  }

  std::shared_ptr<const CompiledGlossary> glossary(const std::string& ref) const {
    std::lock_guard lock(mutex_);
    auto it = glossaries_.find(ref);
    if (it == glossaries_.end()) throw UnknownGlossary("no glossary '" + ref + "'");
    return it->second;
  }

  std::shared_ptr<Session> create_session(const SessionConfig& config) {
    if (config.cooldown_ms < 0) throw InvalidConfig("cooldown_ms must be non-negative");
    auto g = glossary(config.glossary);
    std::lock_guard lock(mutex_);
    std::string id = "s" + std::to_string(++session_counter_);
    std::optional<std::string> log_path;
    if (log_dir_) log_path = *log_dir_ + "/" + id + ".cuelog";
    auto session = std::make_shared<Session>(id, std::move(g), config, log_path);
    sessions_.emplace(id, session);
    return session;
  }

  std::shared_ptr<Session> session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw UnknownSession("no session '" + id + "'");
    return it->second;
  }

  std::vector<std::shared_ptr<Session>> sessions() const {
    std::lock_guard lock(mutex_);
    std::vector<std::shared_ptr<Session>> out;
    for (const auto& [id, s] : sessions_) out.push_back(s);
    return out;
  }

  void shutdown() {
    for (auto& s : sessions()) s->close();
  }

 private:
  std::optional<std::string> log_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const CompiledGlossary>> glossaries_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t session_counter_ = 0;
};

}  // namespace cuebuddy
