#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fieldlog/classify/lexicon.h"
#include "fieldlog/core/error.h"
#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/ingest/ingest.h"
#include "fieldlog/ingest/transcription.h"

namespace httplib {
class Server;
}

namespace fieldlog::server {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::size_t default_limit = 500;
  std::size_t max_limit = 100000;
  Duration events_keepalive{15};
};

// 400 Validation, 404 NotFound, 409 Conflict, 502 TranscriptionFailed,
// 422 NoZone, 500 Internal.
int http_status(ErrorCode code);
Json api_error(const Error& e);

// Fan-out of delivery notifications to /events subscribers. Each published
// item gets a sequence number; a bounded backlog lets reconnecting clients
// resume after the last number they saw.
class EventHub {
 public:
  struct Item {
    std::uint64_t seq = 0;
    std::string user_id;
    std::string line;  // one JSON document, no newline
  };

  explicit EventHub(std::size_t backlog = 4096) : backlog_(backlog) {}

  void publish(const std::string& user_id, Json event);
  // Items for `user_id` with seq > after, waiting up to `timeout` for at least
  // one. Returns early (possibly empty) once closed.
  std::vector<Item> wait(const std::string& user_id, std::uint64_t after, Duration timeout);
  std::uint64_t last_seq() const;
  void close();
  bool closed() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Item> items_;
  std::size_t backlog_;
  std::uint64_t next_seq_ = 1;
  bool closed_ = false;
};

class Server {
 public:
  // `transcriber` may be null (audio-only submissions then fail).
  Server(Store& store, const classify::Lexicon& lexicon, ingest::Transcriber* transcriber,
         ServerConfig config = {}, Clock clock = system_now);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  // Bind failure throws Error{Internal}.
  int start();
  // Stops accepting, closes event streams, and waits for in-flight requests.
  void stop();
  // Blocks until stop() is called from elsewhere.
  void wait();
  int port() const { return port_; }

  EventHub& events() { return hub_; }

 private:
  void routes();

  Store& store_;
  const classify::Lexicon& lexicon_;
  ServerConfig config_;
  Clock clock_;
  ingest::MessageIngestor ingestor_;
  EventHub hub_;
  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  int port_ = 0;
  std::mutex state_mutex_;
  std::condition_variable stopped_cv_;
  bool running_ = false;
};

}  // namespace fieldlog::server
