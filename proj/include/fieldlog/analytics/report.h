#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/analytics/query.h"
#include "fieldlog/classify/lexicon.h"
#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"

namespace fieldlog::analytics {

enum class Period { Daily, Weekly, Monthly };

std::string_view to_string(Period p);
std::optional<Period> parse_period(std::string_view s);

// Daily: any UTC midnight. Weekly: a Monday midnight (ISO week). Monthly: the
// first of a month. Throws Validation otherwise.
void validate_period_start(Period period, Timestamp start);
Timestamp period_end(Period period, Timestamp start);

struct StreamStats {
  std::size_t count = 0;
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> mean;
};

// Label counts are per message and axis: a message contributes once for each
// distinct label its classification units carry on that axis. An unsplit
// message therefore counts once per axis, and a message split into two units
// with different importance counts twice on the importance axis.
struct SummaryReport {
  Period period = Period::Daily;
  Timestamp period_start;
  Timestamp period_end;
  std::size_t message_count = 0;
  std::size_t unit_count = 0;
  std::map<Subject, std::size_t> by_subject;
  std::map<Importance, std::size_t> by_importance;
  std::map<TypeCode, std::size_t> by_type_code;
  std::map<std::string, StreamStats> stream_stats;
  std::vector<KeywordCount> top_keywords;
  std::size_t pest_mention_count = 0;  // messages with at least one pest term
};

inline constexpr std::size_t kDefaultTopKeywords = 10;

SummaryReport summary_report(const Store& store, Period period, Timestamp period_start,
                             const classify::Lexicon& lexicon,
                             std::size_t top_k = kDefaultTopKeywords);

void to_json(Json& j, const SummaryReport& v);

}  // namespace fieldlog::analytics
