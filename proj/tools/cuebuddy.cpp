// cuebuddy: glossary tooling, offline spotting, benchmarking, discovery and
// the live cue service.

#include <charconv>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <boost/asio/signal_set.hpp>
#include <CLI11.hpp>

#include "cuebuddy/discovery.hpp"
#include "cuebuddy/generator.hpp"
#include "cuebuddy/glossary.hpp"
#include "cuebuddy/replay.hpp"
#include "cuebuddy/server.hpp"

using namespace cuebuddy;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct DiagnosticsFound {};

std::vector<GlossaryEntry> load_valid_entries(const std::string& path) {
  auto file = load_glossary_file(path);
  auto diagnostics = validate_glossary(file);
  for (const auto& d : diagnostics) std::cerr << path << ":" << d.to_string() << "\n";
  if (!diagnostics.empty()) throw DiagnosticsFound{};
  return file.entries;
}

SessionConfig session_config(const std::string& mode, std::int64_t cooldown_ms) {
  SessionConfig c;
  c.mode = parse_mode(mode);
  c.cooldown_ms = cooldown_ms;
  if (cooldown_ms < 0) throw InvalidConfig("--cooldown-ms must be non-negative");
  return c;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IoError", "cannot write '" + path + "'");
  out << text;
}

std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw InvalidConfig("--bind must be host:port");
  unsigned port = 0;
  auto digits = bind.substr(colon + 1);
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || p != digits.data() + digits.size() || port > 65535)
    throw InvalidConfig("bad port in --bind '" + bind + "'");
  return {bind.substr(0, colon), static_cast<unsigned short>(port)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cuebuddy: multilingual lexical cues for live lectures"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cuebuddy 0.1.0");

  std::string glossary_path, transcript_path, background_path, out_path, lang = "en";
  std::string mode = "finals", term, bind = "127.0.0.1:8080", log_dir = "cuelogs";
  std::int64_t cooldown_ms = static_cast<std::int64_t>(kDefaultCooldownMs);
  double speed = 0;
  std::size_t top_k = 20;
  bool as_json = false;

  auto add_mode_flags = [&](CLI::App* cmd) {
    cmd->add_option("--mode", mode, "finals or eager")
        ->check(CLI::IsMember({"finals", "finals_only", "eager"}))
        ->envname("CUEBUDDY_MODE")
        ->capture_default_str();
    cmd->add_option("--cooldown-ms", cooldown_ms, "minimum gap between cues for one term")
        ->envname("CUEBUDDY_COOLDOWN_MS")
        ->capture_default_str();
  };

  // glossary ---------------------------------------------------------------
  auto* glossary = app.add_subcommand("glossary", "build, validate, query or extend a glossary");
  glossary->require_subcommand(1);

  auto* build = glossary->add_subcommand("build", "compile a glossary and print its version");
  build->add_option("--glossary", glossary_path, "glossary JSONL file")->required();
  build->add_option("--out", out_path, "write the compiled glossary (JSON) here");
  build->callback([&] {
    auto compiled = compile_glossary(load_valid_entries(glossary_path));
    if (!out_path.empty()) write_text(out_path, compiled.to_json() + "\n");
    std::cout << compiled.version() << "\n";
  });

  auto* validate = glossary->add_subcommand("validate", "check a glossary and list problems");
  validate->add_option("--glossary", glossary_path, "glossary JSONL file")->required();
  validate->callback([&] {
    load_valid_entries(glossary_path);
    std::cerr << glossary_path << ": ok\n";
  });

  auto* lookup_cmd = glossary->add_subcommand("lookup", "print the explanation of a term");
  lookup_cmd->add_option("--glossary", glossary_path, "glossary JSONL file")->required();
  lookup_cmd->add_option("--term", term, "term or alias")->required();
  lookup_cmd->add_option("--lang", lang, "language code")->capture_default_str();
  lookup_cmd->add_flag("--json", as_json, "print the full lookup result as JSON");
  lookup_cmd->callback([&] {
    auto compiled = compile_glossary(load_glossary_file(glossary_path));
    auto id = compiled.find(term);
    if (!id) throw UnknownTerm("'" + term + "' is not in " + glossary_path);
    auto r = lookup(compiled, *id, lang);
    if (as_json) {
      nlohmann::ordered_json j{{"term_id", r.term_id},
                               {"canonical", r.canonical},
                               {"lang_used", r.language_used.empty() ? nlohmann::ordered_json()
                                                                     : nlohmann::ordered_json(r.language_used)},
                               {"fallback", to_string(r.fallback)},
                               {"explanation", r.explanation}};
      std::cout << j.dump() << "\n";
      return;
    }
    std::cout << (r.fallback == Fallback::term_only ? r.canonical : r.explanation) << "\n";
    if (r.fallback != Fallback::none)
      std::cerr << "note: no '" << lang << "' explanation, fallback " << to_string(r.fallback)
                << "\n";
  });

  std::vector<std::string> gen_langs;
  std::string adapter_command;
  std::int64_t timeout_ms = 30000;
  auto* generate = glossary->add_subcommand(
      "generate", "ask an external generator for explanations and merge them in");
  generate->add_option("--glossary", glossary_path, "glossary JSONL file (rewritten)")->required();
  generate->add_option("--term", term, "term to explain")->required();
  generate->add_option("--lang", gen_langs, "languages, comma separated")
      ->required()
      ->delimiter(',');
  generate->add_option("--adapter", adapter_command,
                       "shell command speaking the JSON-lines generator protocol")
      ->required()
      ->envname("CUEBUDDY_ADAPTER");
  generate->add_option("--timeout-ms", timeout_ms, "reply deadline")->capture_default_str();
  generate->add_option("--out", out_path, "write the merged glossary here instead");
  generate->callback([&] {
    auto entries = load_glossary_file(glossary_path).entries;
    ProcessAdapter adapter(adapter_command);
    auto result = generate_explanations(adapter, term, gen_langs,
                                        std::chrono::milliseconds(timeout_ms));
    for (const auto& d : result.diagnostics) std::cerr << "warning: " << d.to_string() << "\n";
    auto problems = merge_generated(entries, result);
    for (const auto& d : problems) std::cerr << d.to_string() << "\n";
    if (!problems.empty()) throw DiagnosticsFound{};
    write_text(out_path.empty() ? glossary_path : out_path, serialize_glossary(entries));
    std::cerr << "merged " << result.entry.explanations.size() << " explanation(s) for '"
              << term << "'\n";
    if (!result.missing.empty()) throw DiagnosticsFound{};
  });

  // spot -------------------------------------------------------------------
  auto* spot = app.add_subcommand("spot", "replay a transcript offline and write the cue log");
  spot->add_option("--glossary", glossary_path, "glossary JSONL file")->required();
  spot->add_option("--transcript", transcript_path, "transcript line-protocol file")->required();
  spot->add_option("--lang", lang, "language cues are rendered in")->capture_default_str();
  spot->add_option("--speed", speed, "0 = as fast as possible, 1 = real time")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  spot->add_option("--out", out_path, "cue log path (default: stdout)");
  add_mode_flags(spot);
  spot->callback([&] {
    auto compiled = std::make_shared<const CompiledGlossary>(
        compile_glossary(load_valid_entries(glossary_path)));
    auto events = load_transcript_file(transcript_path);
    if (!is_valid_language_code(lang)) throw InvalidLanguage("'" + lang + "'");
    ReplayOptions options;
    options.session = session_config(mode, cooldown_ms);
    options.language = lang;
    options.speed = speed;
    options.subscribers = 1;
    auto r = replay(compiled, events, options);
    std::string log;
    for (const auto& c : r.cues) log += format_cue_log_line(c) + "\n";
    write_text(out_path, log);
    for (const auto& rej : r.rejections) std::cerr << "rejected: " << rej << "\n";
    double max_ms = r.engine_ms.empty() ? 0 : *std::max_element(r.engine_ms.begin(), r.engine_ms.end());
    std::cerr << "events: " << r.events << " (" << r.rejected << " rejected)\n"
              << "cues: " << r.cues.size() << "\n";
    for (const auto& [name, count] : r.per_term) std::cerr << "  " << name << "\t" << count << "\n";
    std::cerr << std::fixed << std::setprecision(3) << "max event time: " << max_ms << " ms\n";
  });

  // bench ------------------------------------------------------------------
  std::vector<std::size_t> sizes{100, 1000};
  std::uint64_t seed = 1;
  std::size_t subscribers = 50;
  std::uint64_t duration_ms = 600000;
  auto* bench = app.add_subcommand("bench", "latency on synthetic lectures per glossary size");
  bench->add_option("--sizes", sizes, "glossary sizes, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--seed", seed, "generator seed")->capture_default_str();
  bench->add_option("--subscribers", subscribers, "simulated subscribers")->capture_default_str();
  bench->add_option("--duration-ms", duration_ms, "synthetic lecture length")->capture_default_str();
  bench->add_option("--speed", speed, "0 = as fast as possible, 1 = real time")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_mode_flags(bench);
  bench->callback([&] {
    BenchOptions options;
    options.seed = seed;
    options.lecture.duration_ms = duration_ms;
    options.replay.session = session_config(mode, cooldown_ms);
    options.replay.speed = speed;
    options.replay.subscribers = subscribers;
    std::cout << "size\tevents\tcues\tengine_p50_ms\tengine_p99_ms\temit_p50_ms\temit_p99_ms\n";
    for (auto size : sizes) {
      auto row = run_bench(size, options);
      std::cout << std::fixed << std::setprecision(3) << row.glossary_size << "\t" << row.events
                << "\t" << row.cues << "\t" << row.engine_p50_ms << "\t" << row.engine_p99_ms
                << "\t" << row.emission_p50_ms << "\t" << row.emission_p99_ms << "\n";
    }
  });

  // discover ---------------------------------------------------------------
  std::size_t max_n = 3;
  auto* discover = app.add_subcommand("discover", "rank transcript n-grams as glossary candidates");
  discover->add_option("--transcript", transcript_path, "transcript line-protocol file")->required();
  discover->add_option("--background", background_path, "token<TAB>frequency file")->required();
  discover->add_option("--top-k", top_k, "number of candidates")->capture_default_str();
  discover->add_option("--max-n", max_n, "longest n-gram")
      ->check(CLI::Range(1, 8))
      ->capture_default_str();
  discover->callback([&] {
    auto background = load_background_file(background_path);
    auto segments = final_segments(load_transcript_file(transcript_path));
    DiscoveryOptions options;
    options.max_n = max_n;
    auto ranked = discover_candidates(segments, background, top_k, options);
    std::cout << std::fixed << std::setprecision(4);
    for (std::size_t i = 0; i < ranked.size(); ++i)
      std::cout << i + 1 << "\t" << ranked[i].score << "\t" << ranked[i].count << "\t"
                << ranked[i].text << "\n";
  });

  // serve ------------------------------------------------------------------
  std::size_t threads = 2;
  auto* serve = app.add_subcommand("serve", "run the live cue service");
  serve->add_option("--glossary", glossary_path, "default glossary JSONL file")
      ->required()
      ->envname("CUEBUDDY_GLOSSARY");
  serve->add_option("--bind", bind, "host:port")->envname("CUEBUDDY_BIND")->capture_default_str();
  serve->add_option("--log-dir", log_dir, "directory for per-session cue logs")
      ->envname("CUEBUDDY_LOG_DIR")
      ->capture_default_str();
  serve->add_option("--threads", threads, "I/O threads")->check(CLI::PositiveNumber)->capture_default_str();
  add_mode_flags(serve);
  serve->callback([&] {
    auto defaults = session_config(mode, cooldown_ms);
    auto [host, port] = parse_bind(bind);
    std::filesystem::create_directories(log_dir);
    SessionRegistry registry(log_dir);
    registry.add_glossary(compile_glossary(load_valid_entries(glossary_path)), "default");
    server::Server srv(registry, host, port, defaults, threads);
    boost::asio::signal_set signals(srv.context(), SIGINT, SIGTERM);
    signals.async_wait([&](const boost::system::error_code&, int) { srv.stop(); });
    srv.start();
    std::cout << "listening on " << host << ":" << srv.port() << std::endl;
    srv.wait();
    std::cerr << "stopped; cue logs flushed to " << log_dir << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const DiagnosticsFound&) {
    return kFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return kFailure;
  } catch (const boost::system::system_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
