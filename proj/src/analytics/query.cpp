#include "fieldlog/analytics/query.h"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::analytics {

void validate(const MessageFilter& filter) {
  if (filter.from && filter.to && *filter.from > *filter.to) {
    fail_validation("from must not be later than to", "from");
  }
  if (filter.keyword && text::tokenize(*filter.keyword).empty()) {
    fail_validation("keyword has no word characters", "keyword");
  }
  if (filter.importance_at_least == Importance::Unclassified) {
    fail_validation("minimum importance must be L1..L5", "importance_at_least");
  }
}

std::vector<Message> query_messages(ReadSession& session, const MessageFilter& filter) {
  validate(filter);
  if (filter.from && filter.to && *filter.from == *filter.to) return {};
  MessageQuery q;
  q.author_id = filter.user_id;
  q.from = filter.from;
  q.to = filter.to;
  q.zone_id = filter.zone_id;
  q.subject = filter.subject;
  q.importance_at_least = filter.importance_at_least;
  auto rows = session.list_messages(q);
  if (!filter.keyword) return rows;
  std::erase_if(rows, [&](const Message& m) {
    auto tokens = text::tokenize(m.transcript);
    return !text::has_keyword(tokens, *filter.keyword);
  });
  return rows;
}

std::vector<Message> query_messages(const Store& store, const MessageFilter& filter) {
  validate(filter);
  return store.read([&](ReadSession& s) { return query_messages(s, filter); });
}

SensorWindow sensor_window(const Store& store, std::string_view message_id, Duration half_width) {
  if (half_width.count() < 0) fail_validation("half_width must be non-negative", "half_width");
  return store.read([&](ReadSession& s) {
    auto msg = s.get_message(message_id);
    if (!msg) fail_not_found("no message " + std::string(message_id));
    if (!msg->zone_id) {
      throw Error(ErrorCode::NoZone, "message " + msg->id + " has no zone", "zone_id");
    }
    SensorWindow out;
    for (const auto& stream : s.list_streams(*msg->zone_id)) {
      ReadingQuery q;
      q.stream_id = stream.id;
      q.from = msg->recorded_at - half_width;
      q.to = msg->recorded_at + half_width;
      q.to_inclusive = true;
      out[stream.id] = s.list_readings(q);
    }
    return out;
  });
}

std::vector<KeywordCount> keyword_stats(std::span<const Message> messages, std::size_t k,
                                        std::span<const std::string> stopwords) {
  std::unordered_set<std::string> stop(stopwords.begin(), stopwords.end());
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& m : messages) {
    for (auto& tok : text::tokenize(m.transcript)) {
      if (!stop.contains(tok)) ++counts[std::move(tok)];
    }
  }
  std::vector<KeywordCount> out;
  out.reserve(counts.size());
  for (auto& [tok, n] : counts) out.push_back({tok, n});
  auto order = [](const KeywordCount& a, const KeywordCount& b) {
    return a.count != b.count ? a.count > b.count : a.token < b.token;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), order);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), order);
  }
  return out;
}

std::vector<KeywordCount> keyword_stats(const Store& store, const MessageFilter& filter,
                                        std::size_t k, std::span<const std::string> stopwords) {
  auto msgs = query_messages(store, filter);
  return keyword_stats(msgs, k, stopwords);
}

void to_json(Json& j, const KeywordCount& v) { j = Json{{"token", v.token}, {"count", v.count}}; }

void to_json(Json& j, const SensorWindow& v) {
  j = Json::object();
  for (const auto& [id, readings] : v) {
    Json arr = Json::array();
    for (const auto& r : readings) arr.push_back(Json{{"timestamp", r.at}, {"value", r.value}});
    j[id] = std::move(arr);
  }
}

}  // namespace fieldlog::analytics
