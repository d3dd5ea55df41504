#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"

namespace fieldlog::analytics {

// Viewpoints over stored messages (user, time, location, keyword, labels).
// Present fields compose by AND; the time range is half-open [from, to).
struct MessageFilter {
  std::optional<std::string> user_id;
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;
  std::optional<std::string> zone_id;
  std::optional<std::string> keyword;  // same token rule as subscription keywords
  std::optional<Subject> subject;
  std::optional<Importance> importance_at_least;
};

// from > to is malformed; from == to is a valid, empty range.
void validate(const MessageFilter& filter);

// Ordered by recorded_at, then id.
std::vector<Message> query_messages(const Store& store, const MessageFilter& filter);
std::vector<Message> query_messages(ReadSession& session, const MessageFilter& filter);

// Readings of every stream in the message's zone within the closed window
// [recorded_at - half_width, recorded_at + half_width], time-ascending per
// stream. Unzoned message -> NoZone.
using SensorWindow = std::map<std::string, std::vector<SensorReading>>;
SensorWindow sensor_window(const Store& store, std::string_view message_id, Duration half_width);

struct KeywordCount {
  std::string token;
  std::size_t count = 0;

  friend bool operator==(const KeywordCount&, const KeywordCount&) = default;
};

// Top-k case-folded token occurrence counts over the matching transcripts,
// stopwords excluded; ordered by count descending, then token.
std::vector<KeywordCount> keyword_stats(std::span<const Message> messages, std::size_t k,
                                        std::span<const std::string> stopwords);
std::vector<KeywordCount> keyword_stats(const Store& store, const MessageFilter& filter,
                                        std::size_t k, std::span<const std::string> stopwords);

void to_json(Json& j, const KeywordCount& v);
void to_json(Json& j, const SensorWindow& v);

}  // namespace fieldlog::analytics
