#include "fieldlog/ingest/sensor_csv.h"

#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include "fieldlog/core/csv.h"
#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::ingest {

std::optional<double> parse_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  std::size_t int_digits = 0, frac_digits = 0;
  bool dot = false;
  for (const char c : s) {
    if (c >= '0' && c <= '9') ++(dot ? frac_digits : int_digits);
    else if (c == '.' && !dot) dot = true;
    else return std::nullopt;
  }
  if (int_digits == 0 || (dot && frac_digits == 0)) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value,
                                         std::chars_format::fixed);
  if (ec == std::errc::result_out_of_range) {
    // Underflow rounds to zero; overflow is reported as non-finite.
    value = 0.0;
    for (const char c : s) {
      if (c >= '1' && c <= '9') {
        const auto int_part = s.substr(0, s.find('.'));
        if (int_part.find_first_not_of('0') != std::string_view::npos) {
          value = std::numeric_limits<double>::infinity();
        }
        break;
      }
    }
  } else if (ec != std::errc{} || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return negative ? -value : value;
}

CsvIngestReport ingest_sensor_csv(Store& store, std::string_view data) {
  csv::Reader reader(data);
  csv::Record header;
  if (!reader.next(header) || header.error || header.fields.size() != 3 ||
      header.fields[0] != "stream_id" || header.fields[1] != "timestamp" ||
      header.fields[2] != "value") {
    fail_validation("header must be exactly '" + std::string(kSensorCsvHeader) + "'", "header");
  }

  return store.write([&](WriteSession& s) {
    std::set<std::string, std::less<>> streams;
    for (auto& st : s.list_streams()) streams.insert(std::move(st.id));

    CsvIngestReport report;
    std::vector<SensorReading> valid;
    csv::Record rec;
    while (reader.next(rec)) {
      if (rec.fields.size() == 1 && rec.fields[0].empty() && !rec.error) continue;
      const auto reject = [&](std::string reason) {
        report.row_errors.push_back({rec.line, std::move(reason)});
      };
      if (rec.error) {
        reject("malformed CSV: " + *rec.error);
        continue;
      }
      if (rec.fields.size() != 3) {
        reject("expected 3 fields, got " + std::to_string(rec.fields.size()));
        continue;
      }
      const auto& id = rec.fields[0];
      if (!streams.contains(id)) {
        reject("unknown stream_id '" + id + "'");
        continue;
      }
      const auto at = parse_timestamp(rec.fields[1]);
      if (!at) {
        reject("unparseable timestamp '" + rec.fields[1] + "'");
        continue;
      }
      const auto lowered = text::case_fold(text::trim(rec.fields[2]));
      const auto value = parse_decimal(rec.fields[2]);
      if (!value) {
        const auto bare = std::string_view(lowered).substr(
            !lowered.empty() && (lowered[0] == '+' || lowered[0] == '-') ? 1 : 0);
        reject((bare == "nan" || bare == "inf" || bare == "infinity")
                   ? "non-finite value '" + rec.fields[2] + "'"
                   : "invalid decimal value '" + rec.fields[2] + "'");
        continue;
      }
      if (!std::isfinite(*value)) {
        reject("non-finite value '" + rec.fields[2] + "'");
        continue;
      }
      valid.push_back({id, *at, *value});
    }
    const auto counts = s.put_readings(valid);
    report.inserted = counts.inserted;
    report.skipped_duplicates = counts.skipped_duplicates;
    return report;
  });
}

void to_json(Json& j, const CsvIngestReport& v) {
  Json errors = Json::array();
  for (const auto& e : v.row_errors) errors.push_back({{"line_no", e.line}, {"reason", e.reason}});
  j = Json{{"inserted", v.inserted},
           {"skipped_duplicates", v.skipped_duplicates},
           {"row_errors", errors}};
}

}  // namespace fieldlog::ingest
