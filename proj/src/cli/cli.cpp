#include "fieldlog/cli/cli.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "fieldlog/analytics/export.h"
#include "fieldlog/analytics/params.h"
#include "fieldlog/analytics/report.h"
#include "fieldlog/classify/classify.h"
#include "fieldlog/core/store.h"
#include "fieldlog/ingest/ingest.h"
#include "fieldlog/ingest/registry.h"
#include "fieldlog/ingest/sensor_csv.h"
#include "fieldlog/server/server.h"
#include "fieldlog/simulator/simulator.h"

namespace fieldlog::cli {

DataDirLock::DataDirLock(const std::filesystem::path& data_dir) {
  std::filesystem::create_directories(data_dir);
  const auto path = data_dir / kLockFile;
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) {
    throw Error(ErrorCode::Internal, "cannot open " + path.string() + ": " + std::strerror(errno));
  }
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::Conflict,
                "server running or another writer holds " + path.string(), "data_dir");
  }
}

DataDirLock::~DataDirLock() {
  if (fd_ >= 0) ::close(fd_);
}

std::string format_error(const Error& e) {
  std::string msg;
  for (char c : std::string_view(e.what())) {
    if (c == '"' || c == '\\') msg += '\\';
    if (c == '\n') {
      msg += "\\n";
      continue;
    }
    msg += c;
  }
  return "error code=" + std::string(to_string(e.code())) +
         " field=" + (e.field_path().empty() ? "-" : e.field_path()) + " message=\"" + msg + "\"";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return 2;
    case ErrorCode::NotFound: return 3;
    case ErrorCode::Conflict: return 4;
    case ErrorCode::TranscriptionFailed: return 5;
    case ErrorCode::NoZone: return 6;
    case ErrorCode::Internal: return 1;
  }
  return 1;
}

namespace {

struct Options {
  std::string data_dir = "fieldlog-data";
  std::string lexicon;
  bool json = false;
  std::string transcriber_url;
  std::string transcriber_path = "/transcribe";
  int transcriber_timeout_ms = 5000;
  std::string transcripts;  // fixture file for the mock adapter
};

std::string read_input(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot read " + path, "file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const classify::Lexicon& lexicon_for(const Options& o, std::optional<classify::Lexicon>& holder) {
  if (o.lexicon.empty()) return classify::Lexicon::builtin();
  holder = classify::Lexicon::load(o.lexicon);
  return *holder;
}

std::unique_ptr<ingest::Transcriber> transcriber_for(const Options& o) {
  if (!o.transcripts.empty()) {
    return std::make_unique<ingest::MockTranscriber>(ingest::MockTranscriber::load(o.transcripts));
  }
  if (!o.transcriber_url.empty()) {
    ingest::HttpTranscriberConfig cfg;
    cfg.base_url = o.transcriber_url;
    cfg.path = o.transcriber_path;
    cfg.timeout = std::chrono::milliseconds{o.transcriber_timeout_ms};
    return std::make_unique<ingest::HttpTranscriber>(cfg);
  }
  return nullptr;
}

void print_report(std::ostream& out, const analytics::SummaryReport& r) {
  out << "period=" << to_string(r.period) << " start=" << format_timestamp(r.period_start)
      << " end=" << format_timestamp(r.period_end) << "\n";
  out << "messages=" << r.message_count << " units=" << r.unit_count
      << " pest_mentions=" << r.pest_mention_count << "\n";
  out << "subject";
  for (const auto& [k, n] : r.by_subject) out << ' ' << to_string(k) << '=' << n;
  out << "\nimportance";
  for (const auto& [k, n] : r.by_importance) out << ' ' << to_string(k) << '=' << n;
  out << "\ntype_code";
  for (const auto& [k, n] : r.by_type_code) out << ' ' << to_string(k) << '=' << n;
  out << "\n";
  for (const auto& [id, st] : r.stream_stats) {
    out << "stream " << id << " count=" << st.count;
    if (st.count > 0) out << " min=" << *st.min << " max=" << *st.max << " mean=" << *st.mean;
    out << "\n";
  }
  for (const auto& kw : r.top_keywords) out << "keyword " << kw.token << ' ' << kw.count << "\n";
}

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Farm field log: voice observations fused with greenhouse sensor data", "fieldlog"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file supplying option values");
  Options o;
  app.add_option("--data-dir", o.data_dir, "Data directory")->envname("FIELDLOG_DATA");
  app.add_option("--lexicon", o.lexicon, "Lexicon file (default: built-in)");
  app.add_flag("--json", o.json, "Machine-readable JSON output");
  app.add_option("--transcriber-url", o.transcriber_url, "Speech-recognition service base URL");
  app.add_option("--transcriber-path", o.transcriber_path, "Speech-recognition request path");
  app.add_option("--transcriber-timeout-ms", o.transcriber_timeout_ms, "Transcription timeout")
      ->check(CLI::PositiveNumber);
  app.add_option("--transcripts", o.transcripts, "Fixture file for the mock transcriber");

  std::function<void()> action;

  auto* serve = app.add_subcommand("serve", "Run the HTTP server");
  server::ServerConfig scfg;
  serve->add_option("--host", scfg.host, "Bind address");
  serve->add_option("--port", scfg.port, "Port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->callback([&] {
    action = [&] {
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      std::optional<classify::Lexicon> lex;
      auto transcriber = transcriber_for(o);
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      server::Server srv(store, lexicon_for(o, lex), transcriber.get(), scfg);
      const int port = srv.start();
      out << "listening host=" << scfg.host << " port=" << port << std::endl;
      wait_for_signal();
      srv.stop();
      out << "stopped" << std::endl;
    };
  });

  std::string file;
  auto* ingest_sensors = app.add_subcommand("ingest-sensors", "Upsert sensor readings from CSV");
  ingest_sensors->add_option("file", file, "CSV file ('-' for stdin)")->required();
  ingest_sensors->callback([&] {
    action = [&] {
      const auto data = read_input(file);
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      const auto report = ingest::ingest_sensor_csv(store, data);
      if (o.json) {
        out << Json(report).dump() << "\n";
        return;
      }
      out << "inserted=" << report.inserted << " skipped_duplicates=" << report.skipped_duplicates
          << " row_errors=" << report.row_errors.size() << "\n";
      for (const auto& e : report.row_errors) {
        out << "row_error line=" << e.line << " reason=\"" << e.reason << "\"\n";
      }
    };
  });

  auto* ingest_messages = app.add_subcommand("ingest-messages", "Ingest message submissions (JSON Lines)");
  ingest_messages->add_option("file", file, "JSONL file ('-' for stdin)")->required();
  ingest_messages->callback([&] {
    action = [&] {
      const auto data = read_input(file);
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      std::optional<classify::Lexicon> lex;
      auto transcriber = transcriber_for(o);
      ingest::MessageIngestor ingestor(store, lexicon_for(o, lex), transcriber.get());
      const auto report = ingest::ingest_messages_jsonl(ingestor, store, data);
      if (o.json) {
        out << Json(report).dump() << "\n";
        return;
      }
      out << "ingested=" << report.ingested << " already_present=" << report.already_present
          << " errors=" << report.errors.size() << "\n";
      for (const auto& e : report.errors) {
        out << "line_error line=" << e.line << " code=" << to_string(e.code) << " reason=\""
            << e.reason << "\"\n";
      }
    };
  });

  std::string message_id;
  std::optional<std::size_t> unit;
  std::string subject, importance, type_code, split;
  auto* annotate = app.add_subcommand("annotate", "Set manual labels on a message");
  annotate->add_option("id", message_id, "Message id")->required();
  annotate->add_option("--unit", unit, "Classification unit index");
  annotate->add_option("--subject", subject, "Subject label");
  annotate->add_option("--importance", importance, "Importance L1..L5");
  annotate->add_option("--type-code", type_code, "Statement type code");
  annotate->add_option("--split", split, "JSON array of label patches, one per resulting unit");
  annotate->callback([&] {
    action = [&] {
      Json body = Json::object();
      if (unit) body["unit_index"] = *unit;
      if (!subject.empty()) body["subject"] = subject;
      if (!importance.empty()) body["importance"] = importance;
      if (!type_code.empty()) body["type_code"] = type_code;
      if (!split.empty()) body["split"] = parse_json(split);
      const auto ann = classify::decode_annotation(body);
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      const auto msg = classify::annotate(store, message_id, ann);
      out << Json(msg).dump(o.json ? -1 : 2) << "\n";
    };
  });

  std::string period_name, start_text;
  std::size_t top_k = analytics::kDefaultTopKeywords;
  auto* report = app.add_subcommand("report", "Summary report for one period");
  report->add_option("period", period_name, "daily | weekly | monthly")->required();
  report->add_option("start", start_text, "Period start (YYYY-MM-DD)")->required();
  report->add_option("--top-k", top_k, "Number of top keywords");
  report->callback([&] {
    action = [&] {
      const auto period = analytics::parse_period(period_name);
      if (!period) fail_validation("period must be daily, weekly or monthly", "period");
      const auto start = parse_instant(start_text, "start");
      Store store(o.data_dir);
      std::optional<classify::Lexicon> lex;
      const auto r = analytics::summary_report(store, *period, start, lexicon_for(o, lex), top_k);
      if (o.json) out << Json(r).dump() << "\n";
      else print_report(out, r);
    };
  });

  std::string what, output;
  analytics::Params filter;
  auto* exp = app.add_subcommand("export", "Export messages or readings as CSV");
  exp->add_option("what", what, "messages | readings")->required()->check(CLI::IsMember({"messages", "readings"}));
  for (const char* key : {"user", "from", "to", "zone", "keyword", "subject", "min_importance", "stream"}) {
    std::string flag = std::string("--") + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    exp->add_option_function<std::string>(flag, [&filter, key](const std::string& v) { filter[key] = v; },
                                          std::string("Filter on ") + key);
  }
  exp->add_option("-o,--output", output, "Write to a file instead of stdout");
  exp->callback([&] {
    action = [&] {
      Store store(o.data_dir);
      std::string csv;
      if (what == "messages") {
        if (filter.contains("stream")) fail_validation("--stream applies to readings", "stream");
        csv = analytics::export_messages_csv(store, analytics::parse_message_filter(filter));
      } else {
        for (const char* k : {"user", "keyword", "subject", "min_importance"}) {
          if (filter.contains(k)) fail_validation(std::string("--") + k + " applies to messages", k);
        }
        csv = analytics::export_readings_csv(store, analytics::parse_reading_filter(filter));
      }
      if (output.empty()) {
        out << csv;
      } else {
        std::ofstream f(output, std::ios::binary | std::ios::trunc);
        f << csv;
        if (!f) throw Error(ErrorCode::Internal, "cannot write " + output);
      }
    };
  });

  std::string scenario_file, out_dir = "simulation";
  bool load = false;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scenario");
  simulate->add_option("scenario", scenario_file, "Scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "Output directory");
  simulate->add_flag("--ingest", load, "Also load the generated data into the data directory");
  simulate->callback([&] {
    action = [&] {
      const auto sc = simulator::load_scenario(scenario_file);
      const auto result = simulator::generate(sc);
      simulator::write_output(result, out_dir);
      std::size_t messages = result.background_message_ids.size();
      for (const auto& gt : result.ground_truth) messages += gt.message_ids.size();
      const auto lines = std::count(result.readings_csv.begin(), result.readings_csv.end(), '\n');
      out << "readings=" << lines - 1 << " messages=" << messages
          << " events=" << result.ground_truth.size() << " out=" << out_dir << "\n";
      if (!load) return;
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      ingest::apply_registry(store, result.registry);
      const auto csv = ingest::ingest_sensor_csv(store, result.readings_csv);
      std::optional<classify::Lexicon> lex;
      ingest::MessageIngestor ingestor(store, lexicon_for(o, lex), nullptr);
      const auto msgs = ingest::ingest_messages_jsonl(ingestor, store, result.submissions_jsonl);
      out << "inserted=" << csv.inserted << " skipped_duplicates=" << csv.skipped_duplicates
          << " ingested=" << msgs.ingested << " already_present=" << msgs.already_present
          << " errors=" << csv.row_errors.size() + msgs.errors.size() << "\n";
    };
  });

  std::string transcript;
  auto* cls = app.add_subcommand("classify", "Rule-classify a transcript");
  cls->add_option("transcript", transcript, "Transcript text")->required();
  cls->callback([&] {
    action = [&] {
      std::optional<classify::Lexicon> lex;
      const auto& lexicon = lexicon_for(o, lex);
      const auto u = classify::classify(transcript, lexicon);
      const auto pests = classify::detect_pest_keywords(transcript, lexicon);
      if (o.json) {
        out << Json{{"unit", u}, {"pest_keywords", pests}}.dump() << "\n";
        return;
      }
      out << "subject=" << to_string(u.subject) << " type_code=" << to_string(u.type_code)
          << " importance=" << to_string(u.importance) << " pests=";
      bool first = true;
      for (const auto& p : pests) {
        out << (first ? "" : ",") << p;
        first = false;
      }
      out << "\n";
    };
  });

  auto* seed = app.add_subcommand("seed", "Load users, zones, streams and subscriptions");
  seed->add_option("file", file, "Registry JSON file")->required();
  seed->callback([&] {
    action = [&] {
      const auto reg = ingest::parse_registry(parse_json(read_input(file)));
      DataDirLock lock(o.data_dir);
      Store store(o.data_dir);
      ingest::apply_registry(store, reg);
      out << "users=" << reg.users.size() << " zones=" << reg.zones.size()
          << " streams=" << reg.streams.size() << " subscriptions=" << reg.subscriptions.size()
          << "\n";
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << format_error(e) << std::endl;
    return exit_status(e.code());
  } catch (const std::exception& e) {
    err << format_error(Error(ErrorCode::Internal, e.what())) << std::endl;
    return 1;
  }
}

}  // namespace fieldlog::cli
