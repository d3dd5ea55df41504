#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fieldlog/core/types.h"

struct sqlite3;

namespace fieldlog {

struct UpsertCount {
  std::size_t inserted = 0;
  std::size_t skipped_duplicates = 0;
};

// Store-level message selection. Present fields compose by AND; the time range
// is half-open [from, to).
struct MessageQuery {
  std::optional<std::string> author_id;
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;
  std::optional<std::string> zone_id;
  std::optional<Subject> subject;                 // any unit carries it
  std::optional<Importance> importance_at_least;  // any unit reaches it
};

struct ReadingQuery {
  std::optional<std::string> stream_id;
  std::optional<std::string> zone_id;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive unless to_inclusive
  bool to_inclusive = false;
};

class Store;

// A connection inside an open transaction. Reads observe one consistent
// snapshot for the lifetime of the session.
class ReadSession {
 public:
  std::optional<User> get_user(std::string_view id);
  std::vector<User> list_users();
  std::optional<Zone> get_zone(std::string_view id);
  std::vector<Zone> list_zones();
  std::optional<SensorStream> get_stream(std::string_view id);
  std::vector<SensorStream> list_streams(std::optional<std::string_view> zone_id = std::nullopt);
  std::optional<SubscriptionRule> get_rule(std::string_view id);
  std::vector<SubscriptionRule> list_rules();

  std::optional<Message> get_message(std::string_view id);
  // Ordered by recorded_at, then id.
  std::vector<Message> list_messages(const MessageQuery& query = {});
  std::size_t count_messages();

  // Ordered by timestamp, then stream id.
  std::vector<SensorReading> list_readings(const ReadingQuery& query = {});

  std::optional<DeliveryRecord> get_delivery(std::string_view message_id, std::string_view user_id);
  std::vector<DeliveryRecord> list_deliveries(std::optional<std::string_view> user_id = std::nullopt,
                                              std::optional<std::string_view> message_id = std::nullopt);

 protected:
  ReadSession(sqlite3* db, const Store* store) : db_(db), store_(store) {}
  friend class Store;

  sqlite3* db_;
  const Store* store_;
};

class WriteSession : public ReadSession {
 public:
  // Insert-or-replace for registry entities.
  void put_user(const User& user);
  // Rejects beacon ids already registered to a different zone (Conflict).
  void put_zone(const Zone& zone);
  void put_stream(const SensorStream& stream);
  void put_rule(const SubscriptionRule& rule);

  // (stream_id, at) duplicates are ignored and counted as skipped.
  UpsertCount put_readings(std::span<const SensorReading> readings);

  // Duplicate id -> Conflict.
  void insert_message(const Message& message);
  void update_units(std::string_view message_id, const std::vector<ClassificationUnit>& units);
  // Fresh server-assigned id ("m0000001", ...), never colliding with stored ids.
  std::string next_message_id();

  // Existing (message_id, user_id) pairs are left untouched. Returns the number inserted.
  std::size_t insert_deliveries(std::span<const DeliveryRecord> records);
  void update_delivery(const DeliveryRecord& record);

  // Calls the store's fault hook; used by crash-injection tests.
  void fault_point(std::string_view stage);

 private:
  WriteSession(sqlite3* db, const Store* store) : ReadSession(db, store) {}
  friend class Store;
};

struct StoreOptions {
  // Invoked at named points inside write transactions ("message", "units",
  // "delivery", "before_commit") and right after each commit ("after_commit").
  // Tests use it to kill the process mid-transaction.
  std::function<void(std::string_view)> fault_hook;
};

// Embedded, file-backed transactional store (SQLite in WAL mode) rooted in a
// data directory. One writer connection serialized by a mutex; readers draw
// from a pool and see snapshot isolation, so long reads never block writers.
class Store {
 public:
  static constexpr std::string_view kDatabaseFile = "fieldlog.db";

  explicit Store(const std::filesystem::path& data_dir, StoreOptions options = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::filesystem::path& data_dir() const { return data_dir_; }

  template <typename Fn>
  auto read(Fn&& fn) const {
    using R = std::invoke_result_t<Fn, ReadSession&>;
    if constexpr (std::is_void_v<R>) {
      run_read([&](ReadSession& s) { fn(s); });
    } else {
      std::optional<R> out;
      run_read([&](ReadSession& s) { out.emplace(fn(s)); });
      return std::move(*out);
    }
  }

  // Runs `fn` in one write transaction; any exception rolls everything back.
  template <typename Fn>
  auto write(Fn&& fn) {
    using R = std::invoke_result_t<Fn, WriteSession&>;
    if constexpr (std::is_void_v<R>) {
      run_write([&](WriteSession& s) { fn(s); });
    } else {
      std::optional<R> out;
      run_write([&](WriteSession& s) { out.emplace(fn(s)); });
      return std::move(*out);
    }
  }

  // Message plus its delivery records, atomically. Duplicate id -> Conflict.
  void append_message(const Message& message, std::span<const DeliveryRecord> deliveries);

  // Convenience single-statement wrappers.
  std::optional<Message> get_message(std::string_view id) const;
  std::optional<User> get_user(std::string_view id) const;
  void put_user(const User& user);
  void put_zone(const Zone& zone);
  void put_stream(const SensorStream& stream);
  void put_rule(const SubscriptionRule& rule);
  UpsertCount put_readings(std::span<const SensorReading> readings);

 private:
  friend class WriteSession;

  void run_read(const std::function<void(ReadSession&)>& fn) const;
  void run_write(const std::function<void(WriteSession&)>& fn);

  sqlite3* checkout_reader() const;
  void release_reader(sqlite3* db) const;

  std::filesystem::path data_dir_;
  StoreOptions options_;
  sqlite3* writer_ = nullptr;
  std::mutex write_mutex_;
  mutable std::mutex pool_mutex_;
  mutable std::vector<sqlite3*> reader_pool_;
};

}  // namespace fieldlog
