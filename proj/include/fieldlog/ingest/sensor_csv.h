#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"

namespace fieldlog::ingest {

inline constexpr std::string_view kSensorCsvHeader = "stream_id,timestamp,value";

struct RowError {
  std::size_t line = 0;
  std::string reason;

  friend bool operator==(const RowError&, const RowError&) = default;
};

struct CsvIngestReport {
  std::size_t inserted = 0;
  std::size_t skipped_duplicates = 0;
  std::vector<RowError> row_errors;
};

// Idempotent upsert of `stream_id,timestamp,value` rows. A bad header throws
// Error{Validation} and ingests nothing; bad rows are reported and skipped.
CsvIngestReport ingest_sensor_csv(Store& store, std::string_view data);

// Strict decimal literal: optional sign, digits, optional "." plus digits. No exponent.
std::optional<double> parse_decimal(std::string_view text);

void to_json(Json& j, const CsvIngestReport& v);

}  // namespace fieldlog::ingest
