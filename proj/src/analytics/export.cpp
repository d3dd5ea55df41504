#include "fieldlog/analytics/export.h"

#include <array>
#include <charconv>

#include "fieldlog/core/csv.h"
#include "fieldlog/core/error.h"

namespace fieldlog::analytics {

void validate(const ReadingFilter& filter) {
  if (filter.from && filter.to && *filter.from > *filter.to) {
    fail_validation("from must not be later than to", "from");
  }
}

std::string format_value(double v) {
  std::array<char, 512> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed);
  if (res.ec != std::errc{}) throw Error(ErrorCode::Internal, "value does not fit");
  return std::string(buf.data(), res.ptr);
}

std::string export_messages_csv(const Store& store, const MessageFilter& filter) {
  auto msgs = query_messages(store, filter);
  std::string out(kMessagesCsvHeader);
  out += '\n';
  for (const auto& m : msgs) {
    for (const auto& u : m.classification_units) {
      const std::array<std::string, 8> row = {m.id,
                                              format_timestamp(m.recorded_at),
                                              m.author_id,
                                              m.zone_id.value_or(""),
                                              std::string(to_string(u.subject)),
                                              std::string(to_string(u.importance)),
                                              std::string(to_string(u.type_code)),
                                              m.transcript};
      csv::append_row(out, row);
    }
  }
  return out;
}

std::string export_readings_csv(const Store& store, const ReadingFilter& filter) {
  validate(filter);
  std::string out(kReadingsCsvHeader);
  out += '\n';
  if (filter.from && filter.to && *filter.from == *filter.to) return out;
  ReadingQuery q;
  q.stream_id = filter.stream_id;
  q.zone_id = filter.zone_id;
  q.from = filter.from;
  q.to = filter.to;
  auto readings = store.read([&](ReadSession& s) { return s.list_readings(q); });
  for (const auto& r : readings) {
    const std::array<std::string, 3> row = {r.stream_id, format_timestamp(r.at),
                                            format_value(r.value)};
    csv::append_row(out, row);
  }
  return out;
}

}  // namespace fieldlog::analytics
