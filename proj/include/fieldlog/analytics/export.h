#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "fieldlog/analytics/query.h"
#include "fieldlog/core/store.h"

namespace fieldlog::analytics {

inline constexpr std::string_view kMessagesCsvHeader =
    "message_id,recorded_at,author_id,zone_id,subject,importance,type_code,transcript";
inline constexpr std::string_view kReadingsCsvHeader = "stream_id,timestamp,value";

struct ReadingFilter {
  std::optional<std::string> stream_id;
  std::optional<std::string> zone_id;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive
};

void validate(const ReadingFilter& filter);

// One row per classification unit; rows sorted by recorded_at, then message id,
// then unit order. RFC 4180 quoting, LF line ends, empty zone_id when Unzoned.
std::string export_messages_csv(const Store& store, const MessageFilter& filter);

// Rows sorted by timestamp, then stream id. Values use the shortest decimal
// form that reads back to the identical double.
std::string export_readings_csv(const Store& store, const ReadingFilter& filter);

std::string format_value(double v);

}  // namespace fieldlog::analytics
