#include "fieldlog/core/store.h"

#include <sqlite3.h>

#include <cstdio>
#include <system_error>

#include "fieldlog/core/error.h"
#include "fieldlog/core/json.h"

namespace fieldlog {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS users (
  id TEXT PRIMARY KEY,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS zones (
  id TEXT PRIMARY KEY,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS beacons (
  beacon_id TEXT PRIMARY KEY,
  zone_id TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS streams (
  id TEXT PRIMARY KEY,
  zone_id TEXT NOT NULL,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS rules (
  id TEXT PRIMARY KEY,
  body TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS readings (
  stream_id TEXT NOT NULL,
  at INTEGER NOT NULL,
  value REAL NOT NULL,
  PRIMARY KEY (stream_id, at)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS readings_by_time ON readings (at, stream_id);
CREATE TABLE IF NOT EXISTS messages (
  id TEXT PRIMARY KEY,
  author_id TEXT NOT NULL,
  recorded_at INTEGER NOT NULL,
  zone_id TEXT,
  body TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS messages_by_time ON messages (recorded_at, id);
CREATE TABLE IF NOT EXISTS units (
  message_id TEXT NOT NULL,
  idx INTEGER NOT NULL,
  subject TEXT NOT NULL,
  importance_rank INTEGER NOT NULL,
  PRIMARY KEY (message_id, idx)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS deliveries (
  message_id TEXT NOT NULL,
  user_id TEXT NOT NULL,
  state TEXT NOT NULL,
  attempts INTEGER NOT NULL,
  last_attempt_at INTEGER,
  PRIMARY KEY (message_id, user_id)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS deliveries_by_user ON deliveries (user_id);
CREATE TABLE IF NOT EXISTS counters (
  name TEXT PRIMARY KEY,
  value INTEGER NOT NULL
);
)sql";

[[noreturn]] void fail_sqlite(sqlite3* db, std::string_view what) {
  throw Error(ErrorCode::Internal,
              std::string("storage: ") + std::string(what) + ": " + sqlite3_errmsg(db));
}

void exec(sqlite3* db, const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error(ErrorCode::Internal, "storage: " + msg);
  }
}

// RAII prepared statement with positional binding.
class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) !=
        SQLITE_OK) {
      fail_sqlite(db, "prepare");
    }
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, std::string_view v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Statement& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Statement& bind(int i, double v) {
    sqlite3_bind_double(stmt_, i, v);
    return *this;
  }
  Statement& bind_null(int i) {
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  // True while rows remain.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) {
      throw Error(ErrorCode::Conflict, std::string("storage constraint: ") + sqlite3_errmsg(db_));
    }
    fail_sqlite(db_, "step");
  }

  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string{};
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

sqlite3* open_connection(const std::filesystem::path& file, bool create) {
  sqlite3* db = nullptr;
  const int flags = SQLITE_OPEN_READWRITE | (create ? SQLITE_OPEN_CREATE : 0) | SQLITE_OPEN_NOMUTEX;
  if (sqlite3_open_v2(file.c_str(), &db, flags, nullptr) != SQLITE_OK) {
    std::string msg = db ? sqlite3_errmsg(db) : "out of memory";
    sqlite3_close(db);
    throw Error(ErrorCode::Internal, "storage: cannot open " + file.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db, 10000);
  exec(db, "PRAGMA foreign_keys = OFF; PRAGMA synchronous = FULL;");
  return db;
}

template <typename T>
T decode_body(const std::string& body) {
  return Json::parse(body).get<T>();
}

template <typename T>
std::optional<T> get_body(sqlite3* db, std::string_view sql, std::string_view id) {
  Statement st(db, sql);
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return decode_body<T>(st.text(0));
}

template <typename T>
std::vector<T> list_bodies(sqlite3* db, std::string_view sql) {
  Statement st(db, sql);
  std::vector<T> out;
  while (st.step()) out.push_back(decode_body<T>(st.text(0)));
  return out;
}

DeliveryRecord read_delivery(const Statement& st) {
  DeliveryRecord d;
  d.message_id = st.text(0);
  d.user_id = st.text(1);
  d.state = parse_delivery_state(st.text(2)).value_or(DeliveryState::Pending);
  d.attempts = st.integer(3);
  if (!st.is_null(4)) d.last_attempt_at = Timestamp{st.integer(4)};
  return d;
}

}  // namespace

// ---- ReadSession -----------------------------------------------------------

std::optional<User> ReadSession::get_user(std::string_view id) {
  return get_body<User>(db_, "SELECT body FROM users WHERE id = ?", id);
}
std::vector<User> ReadSession::list_users() {
  return list_bodies<User>(db_, "SELECT body FROM users ORDER BY id");
}
std::optional<Zone> ReadSession::get_zone(std::string_view id) {
  return get_body<Zone>(db_, "SELECT body FROM zones WHERE id = ?", id);
}
std::vector<Zone> ReadSession::list_zones() {
  return list_bodies<Zone>(db_, "SELECT body FROM zones ORDER BY id");
}
std::optional<SensorStream> ReadSession::get_stream(std::string_view id) {
  return get_body<SensorStream>(db_, "SELECT body FROM streams WHERE id = ?", id);
}
std::vector<SensorStream> ReadSession::list_streams(std::optional<std::string_view> zone_id) {
  if (!zone_id) return list_bodies<SensorStream>(db_, "SELECT body FROM streams ORDER BY id");
  Statement st(db_, "SELECT body FROM streams WHERE zone_id = ? ORDER BY id");
  st.bind(1, *zone_id);
  std::vector<SensorStream> out;
  while (st.step()) out.push_back(decode_body<SensorStream>(st.text(0)));
  return out;
}
std::optional<SubscriptionRule> ReadSession::get_rule(std::string_view id) {
  return get_body<SubscriptionRule>(db_, "SELECT body FROM rules WHERE id = ?", id);
}
std::vector<SubscriptionRule> ReadSession::list_rules() {
  return list_bodies<SubscriptionRule>(db_, "SELECT body FROM rules ORDER BY id");
}

std::optional<Message> ReadSession::get_message(std::string_view id) {
  return get_body<Message>(db_, "SELECT body FROM messages WHERE id = ?", id);
}

std::vector<Message> ReadSession::list_messages(const MessageQuery& q) {
  std::string sql = "SELECT body FROM messages m WHERE 1";
  if (q.author_id) sql += " AND m.author_id = :author";
  if (q.from) sql += " AND m.recorded_at >= :from";
  if (q.to) sql += " AND m.recorded_at < :to";
  if (q.zone_id) sql += " AND m.zone_id = :zone";
  if (q.subject) {
    sql += " AND EXISTS (SELECT 1 FROM units u WHERE u.message_id = m.id AND u.subject = :subject)";
  }
  if (q.importance_at_least) {
    sql += " AND EXISTS (SELECT 1 FROM units u WHERE u.message_id = m.id"
           " AND u.importance_rank >= :rank AND u.importance_rank > 0)";
  }
  sql += " ORDER BY m.recorded_at, m.id";
  Statement st(db_, sql);
  int i = 0;
  if (q.author_id) st.bind(++i, *q.author_id);
  if (q.from) st.bind(++i, q.from->seconds);
  if (q.to) st.bind(++i, q.to->seconds);
  if (q.zone_id) st.bind(++i, *q.zone_id);
  if (q.subject) st.bind(++i, to_string(*q.subject));
  if (q.importance_at_least) {
    st.bind(++i, static_cast<std::int64_t>(importance_rank(*q.importance_at_least)));
  }
  std::vector<Message> out;
  while (st.step()) out.push_back(decode_body<Message>(st.text(0)));
  return out;
}

std::size_t ReadSession::count_messages() {
  Statement st(db_, "SELECT COUNT(*) FROM messages");
  st.step();
  return static_cast<std::size_t>(st.integer(0));
}

std::vector<SensorReading> ReadSession::list_readings(const ReadingQuery& q) {
  std::string sql = "SELECT r.stream_id, r.at, r.value FROM readings r";
  if (q.zone_id) sql += " JOIN streams s ON s.id = r.stream_id";
  sql += " WHERE 1";
  if (q.stream_id) sql += " AND r.stream_id = ?";
  if (q.zone_id) sql += " AND s.zone_id = ?";
  if (q.from) sql += " AND r.at >= ?";
  if (q.to) sql += q.to_inclusive ? " AND r.at <= ?" : " AND r.at < ?";
  sql += " ORDER BY r.at, r.stream_id";
  Statement st(db_, sql);
  int i = 0;
  if (q.stream_id) st.bind(++i, *q.stream_id);
  if (q.zone_id) st.bind(++i, *q.zone_id);
  if (q.from) st.bind(++i, q.from->seconds);
  if (q.to) st.bind(++i, q.to->seconds);
  std::vector<SensorReading> out;
  while (st.step()) out.push_back({st.text(0), Timestamp{st.integer(1)}, st.real(2)});
  return out;
}

std::optional<DeliveryRecord> ReadSession::get_delivery(std::string_view message_id,
                                                        std::string_view user_id) {
  Statement st(db_,
               "SELECT message_id, user_id, state, attempts, last_attempt_at FROM deliveries"
               " WHERE message_id = ? AND user_id = ?");
  st.bind(1, message_id).bind(2, user_id);
  if (!st.step()) return std::nullopt;
  return read_delivery(st);
}

std::vector<DeliveryRecord> ReadSession::list_deliveries(std::optional<std::string_view> user_id,
                                                         std::optional<std::string_view> message_id) {
  std::string sql =
      "SELECT message_id, user_id, state, attempts, last_attempt_at FROM deliveries WHERE 1";
  if (user_id) sql += " AND user_id = ?";
  if (message_id) sql += " AND message_id = ?";
  sql += " ORDER BY message_id, user_id";
  Statement st(db_, sql);
  int i = 0;
  if (user_id) st.bind(++i, *user_id);
  if (message_id) st.bind(++i, *message_id);
  std::vector<DeliveryRecord> out;
  while (st.step()) out.push_back(read_delivery(st));
  return out;
}

// ---- WriteSession ----------------------------------------------------------

void WriteSession::put_user(const User& user) {
  validate(user);
  Statement st(db_, "INSERT OR REPLACE INTO users (id, body) VALUES (?, ?)");
  st.bind(1, user.id).bind(2, Json(user).dump());
  st.step();
}

void WriteSession::put_zone(const Zone& zone) {
  validate(zone);
  for (const auto& beacon : zone.beacon_ids) {
    Statement check(db_, "SELECT zone_id FROM beacons WHERE beacon_id = ?");
    check.bind(1, beacon);
    if (check.step() && check.text(0) != zone.id) {
      throw Error(ErrorCode::Conflict,
                  "beacon '" + beacon + "' is already registered to zone '" + check.text(0) + "'",
                  "beacon_ids");
    }
  }
  Statement clear(db_, "DELETE FROM beacons WHERE zone_id = ?");
  clear.bind(1, zone.id);
  clear.step();
  Statement add(db_, "INSERT INTO beacons (beacon_id, zone_id) VALUES (?, ?)");
  for (const auto& beacon : zone.beacon_ids) {
    add.reset();
    add.bind(1, beacon).bind(2, zone.id);
    add.step();
  }
  Statement st(db_, "INSERT OR REPLACE INTO zones (id, body) VALUES (?, ?)");
  st.bind(1, zone.id).bind(2, Json(zone).dump());
  st.step();
}

void WriteSession::put_stream(const SensorStream& stream) {
  validate(stream);
  if (!get_zone(stream.zone_id)) {
    fail_validation("unknown zone '" + stream.zone_id + "'", "zone_id");
  }
  Statement st(db_, "INSERT OR REPLACE INTO streams (id, zone_id, body) VALUES (?, ?, ?)");
  st.bind(1, stream.id).bind(2, stream.zone_id).bind(3, Json(stream).dump());
  st.step();
}

void WriteSession::put_rule(const SubscriptionRule& rule) {
  validate(rule);
  if (!get_user(rule.user_id)) fail_validation("unknown user '" + rule.user_id + "'", "user_id");
  Statement st(db_, "INSERT OR REPLACE INTO rules (id, body) VALUES (?, ?)");
  st.bind(1, rule.id).bind(2, Json(rule).dump());
  st.step();
}

UpsertCount WriteSession::put_readings(std::span<const SensorReading> readings) {
  UpsertCount count;
  Statement st(db_, "INSERT OR IGNORE INTO readings (stream_id, at, value) VALUES (?, ?, ?)");
  for (const auto& r : readings) {
    validate(r);
    st.reset();
    st.bind(1, r.stream_id).bind(2, r.at.seconds).bind(3, r.value);
    st.step();
    if (sqlite3_changes(db_) > 0) ++count.inserted;
    else ++count.skipped_duplicates;
  }
  return count;
}

void WriteSession::insert_message(const Message& m) {
  validate(m);
  {
    Statement exists(db_, "SELECT 1 FROM messages WHERE id = ?");
    exists.bind(1, m.id);
    if (exists.step()) throw Error(ErrorCode::Conflict, "message '" + m.id + "' already exists", "id");
  }
  Statement st(db_,
               "INSERT INTO messages (id, author_id, recorded_at, zone_id, body)"
               " VALUES (?, ?, ?, ?, ?)");
  st.bind(1, m.id).bind(2, m.author_id).bind(3, m.recorded_at.seconds);
  if (m.zone_id) st.bind(4, *m.zone_id);
  else st.bind_null(4);
  st.bind(5, Json(m).dump());
  st.step();
  fault_point("message");
  update_units(m.id, m.classification_units);
}

void WriteSession::update_units(std::string_view message_id,
                                const std::vector<ClassificationUnit>& units) {
  if (units.empty()) {
    fail_validation("at least one classification unit is required", "classification_units");
  }
  auto message = get_message(message_id);
  if (!message) fail_not_found("message '" + std::string(message_id) + "' not found");
  if (message->classification_units != units) {
    message->classification_units = units;
    validate(*message);
    Statement body(db_, "UPDATE messages SET body = ? WHERE id = ?");
    body.bind(1, Json(*message).dump()).bind(2, message_id);
    body.step();
  }
  Statement clear(db_, "DELETE FROM units WHERE message_id = ?");
  clear.bind(1, message_id);
  clear.step();
  Statement add(db_,
                "INSERT INTO units (message_id, idx, subject, importance_rank) VALUES (?, ?, ?, ?)");
  for (std::size_t i = 0; i < units.size(); ++i) {
    add.reset();
    add.bind(1, message_id)
        .bind(2, static_cast<std::int64_t>(i))
        .bind(3, to_string(units[i].subject))
        .bind(4, static_cast<std::int64_t>(importance_rank(units[i].importance)));
    add.step();
  }
  fault_point("units");
}

std::string WriteSession::next_message_id() {
  Statement bump(db_,
                 "INSERT INTO counters (name, value) VALUES ('message', 1)"
                 " ON CONFLICT(name) DO UPDATE SET value = value + 1");
  bump.step();
  Statement read(db_, "SELECT value FROM counters WHERE name = 'message'");
  read.step();
  std::int64_t n = read.integer(0);
  Statement exists(db_, "SELECT 1 FROM messages WHERE id = ?");
  while (true) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "m%07lld", static_cast<long long>(n));
    exists.reset();
    exists.bind(1, std::string_view(buf));
    if (!exists.step()) {
      Statement store_n(db_, "UPDATE counters SET value = ? WHERE name = 'message'");
      store_n.bind(1, n);
      store_n.step();
      return buf;
    }
    ++n;
  }
}

std::size_t WriteSession::insert_deliveries(std::span<const DeliveryRecord> records) {
  std::size_t inserted = 0;
  Statement st(db_,
               "INSERT OR IGNORE INTO deliveries"
               " (message_id, user_id, state, attempts, last_attempt_at) VALUES (?, ?, ?, ?, ?)");
  for (const auto& d : records) {
    validate(d);
    st.reset();
    st.bind(1, d.message_id).bind(2, d.user_id).bind(3, to_string(d.state)).bind(4, d.attempts);
    if (d.last_attempt_at) st.bind(5, d.last_attempt_at->seconds);
    else st.bind_null(5);
    st.step();
    if (sqlite3_changes(db_) > 0) ++inserted;
    fault_point("delivery");
  }
  return inserted;
}

void WriteSession::update_delivery(const DeliveryRecord& d) {
  validate(d);
  Statement st(db_,
               "UPDATE deliveries SET state = ?, attempts = ?, last_attempt_at = ?"
               " WHERE message_id = ? AND user_id = ?");
  st.bind(1, to_string(d.state)).bind(2, d.attempts);
  if (d.last_attempt_at) st.bind(3, d.last_attempt_at->seconds);
  else st.bind_null(3);
  st.bind(4, d.message_id).bind(5, d.user_id);
  st.step();
  if (sqlite3_changes(db_) == 0) {
    fail_not_found("no delivery of '" + d.message_id + "' to '" + d.user_id + "'");
  }
}

void WriteSession::fault_point(std::string_view stage) {
  if (store_->options_.fault_hook) store_->options_.fault_hook(stage);
}

// ---- Store -----------------------------------------------------------------

Store::Store(const std::filesystem::path& data_dir, StoreOptions options)
    : data_dir_(data_dir), options_(std::move(options)) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir_, ec);
  if (ec) {
    throw Error(ErrorCode::Internal,
                "storage: cannot create data directory " + data_dir_.string() + ": " + ec.message());
  }
  writer_ = open_connection(data_dir_ / kDatabaseFile, true);
  try {
    exec(writer_, "PRAGMA journal_mode = WAL;");
    exec(writer_, kSchema);
  } catch (...) {
    sqlite3_close(writer_);
    throw;
  }
}

Store::~Store() {
  for (auto* db : reader_pool_) sqlite3_close(db);
  sqlite3_close(writer_);
}

sqlite3* Store::checkout_reader() const {
  {
    std::lock_guard lock(pool_mutex_);
    if (!reader_pool_.empty()) {
      auto* db = reader_pool_.back();
      reader_pool_.pop_back();
      return db;
    }
  }
  auto* db = open_connection(data_dir_ / kDatabaseFile, false);
  exec(db, "PRAGMA query_only = ON;");
  return db;
}

void Store::release_reader(sqlite3* db) const {
  std::lock_guard lock(pool_mutex_);
  reader_pool_.push_back(db);
}

void Store::run_read(const std::function<void(ReadSession&)>& fn) const {
  sqlite3* db = checkout_reader();
  try {
    exec(db, "BEGIN");
    ReadSession session(db, this);
    fn(session);
    exec(db, "COMMIT");
  } catch (...) {
    sqlite3_exec(db, "ROLLBACK", nullptr, nullptr, nullptr);
    release_reader(db);
    throw;
  }
  release_reader(db);
}

void Store::run_write(const std::function<void(WriteSession&)>& fn) {
  std::lock_guard lock(write_mutex_);
  exec(writer_, "BEGIN IMMEDIATE");
  try {
    WriteSession session(writer_, this);
    fn(session);
    session.fault_point("before_commit");
    exec(writer_, "COMMIT");
  } catch (...) {
    sqlite3_exec(writer_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  if (options_.fault_hook) options_.fault_hook("after_commit");
}

void Store::append_message(const Message& message, std::span<const DeliveryRecord> deliveries) {
  write([&](WriteSession& s) {
    s.insert_message(message);
    s.insert_deliveries(deliveries);
  });
}

std::optional<Message> Store::get_message(std::string_view id) const {
  return read([&](ReadSession& s) { return s.get_message(id); });
}
std::optional<User> Store::get_user(std::string_view id) const {
  return read([&](ReadSession& s) { return s.get_user(id); });
}
void Store::put_user(const User& user) {
  write([&](WriteSession& s) { s.put_user(user); });
}
void Store::put_zone(const Zone& zone) {
  write([&](WriteSession& s) { s.put_zone(zone); });
}
void Store::put_stream(const SensorStream& stream) {
  write([&](WriteSession& s) { s.put_stream(stream); });
}
void Store::put_rule(const SubscriptionRule& rule) {
  write([&](WriteSession& s) { s.put_rule(rule); });
}
UpsertCount Store::put_readings(std::span<const SensorReading> readings) {
  return write([&](WriteSession& s) { return s.put_readings(readings); });
}

}  // namespace fieldlog
