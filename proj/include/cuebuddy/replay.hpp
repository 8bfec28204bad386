#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "cuebuddy/session.hpp"
#include "cuebuddy/synthetic.hpp"

namespace cuebuddy {

struct ReplayOptions {
  SessionConfig session;
  std::string language = "en";
  /// 0 replays as fast as possible; 1 paces events by their end_ms in real
  /// time; 10 is ten times faster than real time.
  double speed = 0;
  /// Extra in-process subscribers that receive every cue.
  std::size_t subscribers = 0;
};

struct ReplayResult {
  std::vector<CueLogRecord> cues;
  std::map<std::string, std::size_t> per_term;
  std::size_t events = 0;
  std::size_t rejected = 0;
  std::vector<std::string> rejections;  // "code: detail" per rejected event
  /// Engine time of every accepted event, in milliseconds.
  std::vector<double> engine_ms;
  /// For accepted final events that produced cues: arrival (scheduled
  /// arrival when paced) to the cue being queued for every subscriber.
  std::vector<double> emission_ms;
};

/// Runs a transcript through a fresh session, exactly as the service would.
inline ReplayResult replay(std::shared_ptr<const CompiledGlossary> glossary,
                           const std::vector<TranscriptEvent>& events,
                           const ReplayOptions& options = {}) {
  if (options.speed < 0 || !std::isfinite(options.speed))
    throw InvalidConfig("speed must be a non-negative number");
  Session session("replay", std::move(glossary), options.session);
  std::vector<std::shared_ptr<Subscriber>> subs;
  for (std::size_t i = 0; i < options.subscribers; ++i)
    subs.push_back(session.subscribe(options.language, std::nullopt, kDefaultSubscriberQueue));

  using clock = std::chrono::steady_clock;
  using ms = std::chrono::duration<double, std::milli>;
  ReplayResult result;
  const auto origin = clock::now();
  const std::uint64_t first_ms = events.empty() ? 0 : events.front().end_ms;
  for (const auto& event : events) {
    auto arrival = clock::now();
    if (options.speed > 0) {
      const double offset = static_cast<double>(event.end_ms - std::min(event.end_ms, first_ms));
      arrival = origin + std::chrono::duration_cast<clock::duration>(ms(offset / options.speed));
      std::this_thread::sleep_until(arrival);
    }
    ++result.events;
    auto ack = session.ingest(event);
    const auto done = clock::now();
    if (!ack.accepted) {
      ++result.rejected;
      result.rejections.push_back(ack.error + ": " + ack.detail);
      continue;
    }
    result.engine_ms.push_back(ms(ack.engine_time).count());
    if (event.kind == EventKind::final && ack.cues > 0)
      result.emission_ms.push_back(ms(done - arrival).count());
    // Subscribers are drained between events so their queues never overflow.
    for (auto& s : subs) s->drain();
  }
  result.cues = session.cue_log();
  for (const auto& c : result.cues) ++result.per_term[c.canonical];
  return result;
}

/// Nearest-rank percentile; 0 for an empty sample.
inline double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

struct BenchRow {
  std::size_t glossary_size = 0;
  std::size_t events = 0;
  std::size_t cues = 0;
  double engine_p50_ms = 0;
  double engine_p99_ms = 0;
  double emission_p50_ms = 0;
  double emission_p99_ms = 0;
};

struct BenchOptions {
  ReplayOptions replay;
  std::uint64_t seed = 1;
  synthetic::LectureOptions lecture;
};

/// Synthetic glossary of `size` terms, a seeded lecture over those terms,
/// and one replay through the session engine.
inline BenchRow run_bench(std::size_t size, const BenchOptions& options = {}) {
  if (size == 0) throw EmptyPatternSet("glossary size must be at least 1");
  auto entries = synthetic::make_glossary(size, options.seed);
  auto glossary = std::make_shared<const CompiledGlossary>(compile_glossary(entries));
  auto events = synthetic::make_lecture(synthetic::terms_of(entries), options.seed + 1,
                                        options.lecture);
  auto r = replay(glossary, events, options.replay);
  BenchRow row;
  row.glossary_size = size;
  row.events = r.events;
  row.cues = r.cues.size();
  row.engine_p50_ms = percentile(r.engine_ms, 50);
  row.engine_p99_ms = percentile(r.engine_ms, 99);
  row.emission_p50_ms = percentile(r.emission_ms, 50);
  row.emission_p99_ms = percentile(r.emission_ms, 99);
  return row;
}

}  // namespace cuebuddy
