#include "fieldlog/server/server.h"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <limits>
#include <functional>

#include "fieldlog/analytics/correlate.h"
#include "fieldlog/analytics/export.h"
#include "fieldlog/analytics/params.h"
#include "fieldlog/analytics/query.h"
#include "fieldlog/analytics/report.h"
#include "fieldlog/classify/classify.h"
#include "fieldlog/ingest/sensor_csv.h"
#include "fieldlog/routing/routing.h"

namespace fieldlog::server {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::TranscriptionFailed: return 502;
    case ErrorCode::NoZone: return 422;
    case ErrorCode::Internal: return 500;
  }
  return 500;
}

Json api_error(const Error& e) {
  Json j{{"code", to_string(e.code())}, {"message", e.what()}};
  j["field_path"] = e.field_path().empty() ? Json(nullptr) : Json(e.field_path());
  return j;
}

void EventHub::publish(const std::string& user_id, Json event) {
  {
    std::lock_guard lock(mutex_);
    event["seq"] = next_seq_;
    items_.push_back({next_seq_++, user_id, event.dump()});
    while (items_.size() > backlog_) items_.pop_front();
  }
  cv_.notify_all();
}

std::vector<EventHub::Item> EventHub::wait(const std::string& user_id, std::uint64_t after,
                                           Duration timeout) {
  std::unique_lock lock(mutex_);
  auto collect = [&] {
    std::vector<Item> out;
    for (const auto& it : items_) {
      if (it.seq > after && it.user_id == user_id) out.push_back(it);
    }
    return out;
  };
  std::vector<Item> out;
  cv_.wait_for(lock, timeout, [&] {
    if (closed_) return true;
    out = collect();
    return !out.empty();
  });
  return out;
}

std::uint64_t EventHub::last_seq() const {
  std::lock_guard lock(mutex_);
  return next_seq_ - 1;
}

void EventHub::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool EventHub::closed() const {
  std::lock_guard lock(mutex_);
  return closed_;
}

namespace {

using Request = httplib::Request;
using Response = httplib::Response;

constexpr const char* kJson = "application/json";
constexpr const char* kCsv = "text/csv; charset=utf-8";

analytics::Params params_of(const Request& req) {
  analytics::Params p;
  for (const auto& [k, v] : req.params) p.emplace(k, v);
  return p;
}

std::optional<std::string> param(const Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

std::string required_param(const Request& req, const char* key) {
  auto v = param(req, key);
  if (!v || v->empty()) fail_validation(std::string("missing query parameter '") + key + "'", key);
  return *v;
}

std::size_t size_param(const Request& req, const char* key, std::size_t fallback, std::size_t max) {
  auto v = param(req, key);
  if (!v) return fallback;
  std::size_t out = 0;
  const auto* end = v->data() + v->size();
  auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc{} || ptr != end || v->empty()) {
    fail_validation("expected a non-negative integer", key);
  }
  if (out > max) fail_validation("at most " + std::to_string(max), key);
  return out;
}

void send_json(Response& res, const Json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), kJson);
}

void send_error(Response& res, const Error& e) { send_json(res, api_error(e), http_status(e.code())); }

Json body_json(const Request& req) { return parse_json(req.body); }

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn = std::move(fn)](const Request& req, Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const Json::exception& e) {
      send_error(res, Error(ErrorCode::Validation, e.what()));
    } catch (const std::exception& e) {
      send_error(res, Error(ErrorCode::Internal, e.what()));
    }
  };
}

}  // namespace

Server::Server(Store& store, const classify::Lexicon& lexicon, ingest::Transcriber* transcriber,
               ServerConfig config, Clock clock)
    : store_(store),
      lexicon_(lexicon),
      config_(std::move(config)),
      clock_(std::move(clock)),
      ingestor_(store, lexicon, transcriber, clock_),
      http_(std::make_unique<httplib::Server>()) {
  ingestor_.set_listener([this](const Message& m, const std::vector<DeliveryRecord>& records) {
    for (const auto& r : records) {
      hub_.publish(r.user_id, Json{{"type", "delivery"}, {"message", m}, {"delivery", r}});
    }
  });
  routes();
}

Server::~Server() { stop(); }

int Server::start() {
  {
    std::lock_guard lock(state_mutex_);
    if (running_) return port_;
  }
  if (config_.port == 0) {
    port_ = http_->bind_to_any_port(config_.host);
    if (port_ <= 0) throw Error(ErrorCode::Internal, "cannot bind " + config_.host);
  } else {
    if (!http_->bind_to_port(config_.host, config_.port)) {
      throw Error(ErrorCode::Internal,
                  "cannot bind " + config_.host + ":" + std::to_string(config_.port));
    }
    port_ = config_.port;
  }
  {
    std::lock_guard lock(state_mutex_);
    running_ = true;
  }
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  return port_;
}

void Server::stop() {
  hub_.close();
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
  {
    std::lock_guard lock(state_mutex_);
    running_ = false;
  }
  stopped_cv_.notify_all();
}

void Server::wait() {
  std::unique_lock lock(state_mutex_);
  stopped_cv_.wait(lock, [this] { return !running_; });
}

namespace {

template <typename T>
Json page(const std::vector<T>& items, const Request& req, Response& res, const ServerConfig& cfg) {
  const auto limit = size_param(req, "limit", cfg.default_limit, cfg.max_limit);
  const auto offset = size_param(req, "offset", 0, std::numeric_limits<std::size_t>::max());
  res.set_header("X-Total-Count", std::to_string(items.size()));
  Json out = Json::array();
  for (std::size_t i = offset; i < items.size() && i - offset < limit; ++i) out.push_back(items[i]);
  return out;
}

std::vector<SensorStream> select_streams(Store& store, const Request& req) {
  const auto stream = param(req, "stream");
  const auto zone = param(req, "zone");
  return store.read([&](ReadSession& s) {
    std::vector<SensorStream> out;
    if (stream) {
      auto st = s.get_stream(*stream);
      if (!st) fail_not_found("no stream " + *stream);
      if (!zone || st->zone_id == *zone) out.push_back(*st);
    } else {
      out = zone ? s.list_streams(*zone) : s.list_streams();
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
  });
}

std::pair<std::optional<Timestamp>, std::optional<Timestamp>> time_range(const Request& req) {
  std::optional<Timestamp> from, to;
  if (auto v = param(req, "from")) from = parse_instant(*v, "from");
  if (auto v = param(req, "to")) to = parse_instant(*v, "to");
  if (from && to && *from > *to) fail_validation("from must not be later than to", "from");
  return {from, to};
}

std::vector<analytics::AnomalyInterval> anomalies_for(Store& store, const Request& req) {
  const auto streams = select_streams(store, req);
  const auto [from, to] = time_range(req);
  const auto p = params_of(req);
  std::vector<analytics::AnomalyInterval> out;
  if (from && to && *from == *to) return out;
  for (const auto& s : streams) {
    const auto dp = analytics::parse_detector_overrides(analytics::default_params(s.kind), p);
    auto found = analytics::detect_anomalies(store, s.id, from, to, dp);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

template <typename T, typename Get, typename List, typename Put>
void crud(httplib::Server& http, Store& store, const std::string& base, const char* what, Get get,
          List list, Put put) {
  http.Get(base, guarded([&store, list](const Request&, Response& res) {
    send_json(res, store.read([&](ReadSession& s) { return Json(list(s)); }));
  }));
  http.Get(base + "/([^/]+)", guarded([&store, get, what](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    auto v = store.read([&](ReadSession& s) { return get(s, id); });
    if (!v) fail_not_found(std::string("no ") + what + " " + id);
    send_json(res, Json(*v));
  }));
  http.Post(base, guarded([&store, get, put, what](const Request& req, Response& res) {
    const auto v = json_field::decode<T>(body_json(req), "");
    store.write([&](WriteSession& s) {
      if (get(s, v.id)) throw Error(ErrorCode::Conflict, std::string(what) + " " + v.id + " exists", "id");
      put(s, v);
    });
    send_json(res, Json(v), 201);
  }));
  http.Put(base + "/([^/]+)", guarded([&store, put](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    Json body = body_json(req);
    if (!body.is_object()) fail_validation("expected a JSON object");
    if (!body.contains("id")) body["id"] = id;
    const auto v = json_field::decode<T>(body, "");
    if (v.id != id) fail_validation("body id does not match the path", "id");
    store.write([&](WriteSession& s) { put(s, v); });
    send_json(res, Json(v));
  }));
}

}  // namespace

void Server::routes() {
  auto& http = *http_;
  const auto& cfg = config_;

  http.Get("/health", [](const Request&, Response& res) { send_json(res, Json{{"status", "ok"}}); });

  http.Post("/messages", guarded([this](const Request& req, Response& res) {
    const auto sub = json_field::decode<ingest::MessageSubmission>(body_json(req), "");
    send_json(res, Json(ingestor_.ingest(sub)), 201);
  }));

  http.Get("/messages", guarded([this, &cfg](const Request& req, Response& res) {
    const auto filter = analytics::parse_message_filter(params_of(req));
    const auto msgs = analytics::query_messages(store_, filter);
    send_json(res, page(msgs, req, res, cfg));
  }));

  http.Get(R"(/messages/([^/]+))", guarded([this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    auto m = store_.get_message(id);
    if (!m) fail_not_found("no message " + id);
    send_json(res, Json(*m));
  }));

  http.Post(R"(/messages/([^/]+)/annotate)", guarded([this](const Request& req, Response& res) {
    const auto ann = classify::decode_annotation(body_json(req));
    send_json(res, Json(classify::annotate(store_, std::string(req.matches[1]), ann)));
  }));

  http.Get(R"(/messages/([^/]+)/window)", guarded([this](const Request& req, Response& res) {
    const auto half = parse_duration(param(req, "half_width").value_or("1h"), "half_width");
    send_json(res, Json(analytics::sensor_window(store_, std::string(req.matches[1]), half)));
  }));

  http.Get("/inbox", guarded([this](const Request& req, Response& res) {
    const auto user = required_param(req, "user");
    std::optional<Timestamp> since;
    if (auto v = param(req, "since")) since = parse_instant(*v, "since");
    send_json(res, Json(routing::fetch_inbox(store_, user, since, clock_())));
  }));

  http.Post("/inbox/ack", guarded([this](const Request& req, Response& res) {
    const auto body = body_json(req);
    if (!body.is_object()) fail_validation("expected a JSON object");
    const auto user = json_field::as_string(json_field::required(body, "user_id", ""), "user_id");
    const auto msg = json_field::as_string(json_field::required(body, "message_id", ""), "message_id");
    send_json(res, Json(routing::acknowledge(store_, user, msg)));
  }));

  http.Post("/sensors/ingest", guarded([this](const Request& req, Response& res) {
    send_json(res, Json(ingest::ingest_sensor_csv(store_, req.body)));
  }));

  http.Get("/streams", guarded([this](const Request& req, Response& res) {
    const auto zone = param(req, "zone");
    send_json(res, store_.read([&](ReadSession& s) {
      return Json(zone ? s.list_streams(*zone) : s.list_streams());
    }));
  }));

  http.Get(R"(/streams/([^/]+))", guarded([this](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    auto st = store_.read([&](ReadSession& s) { return s.get_stream(id); });
    if (!st) fail_not_found("no stream " + id);
    send_json(res, Json(*st));
  }));

  http.Get(R"(/streams/([^/]+)/readings)", guarded([this, &cfg](const Request& req, Response& res) {
    const std::string id = req.matches[1];
    const auto [from, to] = time_range(req);
    auto readings = store_.read([&](ReadSession& s) {
      if (!s.get_stream(id)) fail_not_found("no stream " + id);
      if (from && to && *from == *to) return std::vector<SensorReading>{};
      ReadingQuery q;
      q.stream_id = id;
      q.from = from;
      q.to = to;
      return s.list_readings(q);
    });
    send_json(res, page(readings, req, res, cfg));
  }));

  http.Get(R"(/reports/([^/]+))", guarded([this](const Request& req, Response& res) {
    const std::string name = req.matches[1];
    const auto period = analytics::parse_period(name);
    if (!period) fail_validation("period must be daily, weekly or monthly", "period");
    const auto start = parse_instant(required_param(req, "start"), "start");
    const auto k = size_param(req, "top_k", analytics::kDefaultTopKeywords, 10000);
    send_json(res, Json(analytics::summary_report(store_, *period, start, lexicon_, k)));
  }));

  http.Get("/anomalies", guarded([this](const Request& req, Response& res) {
    send_json(res, Json(anomalies_for(store_, req)));
  }));

  http.Get("/correlations", guarded([this](const Request& req, Response& res) {
    auto gap = analytics::kDefaultMaxGap;
    if (auto v = param(req, "max_gap")) gap = parse_duration(*v, "max_gap");
    if (gap.count() < 0) fail_validation("max_gap must be non-negative", "max_gap");
    const auto anomalies = anomalies_for(store_, req);
    auto [streams, messages] = store_.read([&](ReadSession& s) {
      std::map<std::string, SensorStream> by_id;
      for (auto& st : s.list_streams()) by_id.emplace(st.id, st);
      return std::pair{std::move(by_id), s.list_messages()};
    });
    send_json(res, Json(analytics::correlate(anomalies, messages, gap, streams, lexicon_)));
  }));

  http.Get("/export/messages.csv", guarded([this](const Request& req, Response& res) {
    const auto filter = analytics::parse_message_filter(params_of(req));
    res.set_content(analytics::export_messages_csv(store_, filter), kCsv);
  }));

  http.Get("/export/readings.csv", guarded([this](const Request& req, Response& res) {
    const auto filter = analytics::parse_reading_filter(params_of(req));
    res.set_content(analytics::export_readings_csv(store_, filter), kCsv);
  }));

  crud<Zone>(
      http, store_, "/zones", "zone",
      [](ReadSession& s, const std::string& id) { return s.get_zone(id); },
      [](ReadSession& s) { return s.list_zones(); },
      [](WriteSession& s, const Zone& z) { s.put_zone(z); });
  crud<User>(
      http, store_, "/users", "user",
      [](ReadSession& s, const std::string& id) { return s.get_user(id); },
      [](ReadSession& s) { return s.list_users(); },
      [](WriteSession& s, const User& u) { s.put_user(u); });
  crud<SubscriptionRule>(
      http, store_, "/subscriptions", "subscription",
      [](ReadSession& s, const std::string& id) { return s.get_rule(id); },
      [](ReadSession& s) { return s.list_rules(); },
      [](WriteSession& s, const SubscriptionRule& r) { s.put_rule(r); });

  http.Get("/events", guarded([this](const Request& req, Response& res) {
    const auto user = required_param(req, "user");
    if (!store_.get_user(user)) fail_validation("unknown user " + user, "user");
    auto last = std::make_shared<std::uint64_t>(hub_.last_seq());
    if (auto v = param(req, "since_seq")) {
      const auto* end = v->data() + v->size();
      auto [ptr, ec] = std::from_chars(v->data(), end, *last);
      if (ec != std::errc{} || ptr != end) fail_validation("expected a sequence number", "since_seq");
    }
    res.set_chunked_content_provider(
        "application/x-ndjson", [this, user, last](std::size_t, httplib::DataSink& sink) {
          auto items = hub_.wait(user, *last, config_.events_keepalive);
          if (hub_.closed()) {
            sink.done();
            return true;
          }
          std::string chunk;
          for (const auto& it : items) {
            chunk += it.line;
            chunk += '\n';
            *last = it.seq;
          }
          if (chunk.empty()) chunk = "\n";
          return sink.write(chunk.data(), chunk.size());
        });
  }));
}

}  // namespace fieldlog::server
