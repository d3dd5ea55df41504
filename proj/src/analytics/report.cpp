#include "fieldlog/analytics/report.h"

#include <chrono>
#include <set>
#include <tuple>

#include "fieldlog/classify/classify.h"
#include "fieldlog/core/error.h"

namespace fieldlog::analytics {

std::string_view to_string(Period p) {
  switch (p) {
    case Period::Daily: return "daily";
    case Period::Weekly: return "weekly";
    case Period::Monthly: return "monthly";
  }
  return "daily";
}

std::optional<Period> parse_period(std::string_view s) {
  if (s == "daily") return Period::Daily;
  if (s == "weekly") return Period::Weekly;
  if (s == "monthly") return Period::Monthly;
  return std::nullopt;
}

namespace {

std::int64_t day_number(Timestamp t) {
  return (t.seconds - seconds_of_day(t)) / 86400;
}

std::chrono::year_month_day civil(Timestamp t) {
  return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{day_number(t)}}};
}

}  // namespace

void validate_period_start(Period period, Timestamp start) {
  if (seconds_of_day(start) != 0) fail_validation("period start must be a UTC midnight", "start");
  // Day 0 (1970-01-01) was a Thursday.
  if (period == Period::Weekly && (day_number(start) + 3) % 7 != 0) {
    fail_validation("weekly period must start on a Monday", "start");
  }
  if (period == Period::Monthly && civil(start).day() != std::chrono::day{1}) {
    fail_validation("monthly period must start on the first of a month", "start");
  }
}

Timestamp period_end(Period period, Timestamp start) {
  switch (period) {
    case Period::Daily: return start + Duration{86400};
    case Period::Weekly: return start + Duration{7 * 86400};
    case Period::Monthly: {
      auto ymd = civil(start);
      auto next = std::chrono::year_month{ymd.year(), ymd.month()} + std::chrono::months{1};
      std::chrono::sys_days d{next / std::chrono::day{1}};
      return Timestamp{d.time_since_epoch().count() * 86400LL};
    }
  }
  return start;
}

SummaryReport summary_report(const Store& store, Period period, Timestamp period_start,
                             const classify::Lexicon& lexicon, std::size_t top_k) {
  validate_period_start(period, period_start);
  SummaryReport r;
  r.period = period;
  r.period_start = period_start;
  r.period_end = period_end(period, period_start);
  for (auto s : kAllSubjects) r.by_subject[s] = 0;
  for (auto i : kAllImportance) r.by_importance[i] = 0;
  for (auto t : kAllTypeCodes) r.by_type_code[t] = 0;

  auto [messages, streams, readings] = store.read([&](ReadSession& s) {
    MessageQuery mq;
    mq.from = r.period_start;
    mq.to = r.period_end;
    ReadingQuery rq;
    rq.from = r.period_start;
    rq.to = r.period_end;
    return std::tuple{s.list_messages(mq), s.list_streams(), s.list_readings(rq)};
  });

  r.message_count = messages.size();
  for (const auto& m : messages) {
    r.unit_count += m.classification_units.size();
    std::set<Subject> subjects;
    std::set<Importance> levels;
    std::set<TypeCode> types;
    for (const auto& u : m.classification_units) {
      subjects.insert(u.subject);
      levels.insert(u.importance);
      types.insert(u.type_code);
    }
    for (auto s : subjects) ++r.by_subject[s];
    for (auto i : levels) ++r.by_importance[i];
    for (auto t : types) ++r.by_type_code[t];
    if (!classify::detect_pest_keywords(m.transcript, lexicon).empty()) ++r.pest_mention_count;
  }

  for (const auto& s : streams) r.stream_stats[s.id];
  for (const auto& rd : readings) {
    auto& st = r.stream_stats[rd.stream_id];
    ++st.count;
    st.min = st.min ? std::min(*st.min, rd.value) : rd.value;
    st.max = st.max ? std::max(*st.max, rd.value) : rd.value;
    st.mean = st.mean.value_or(0.0) + rd.value;
  }
  for (auto& [id, st] : r.stream_stats) {
    if (st.count > 0) *st.mean /= static_cast<double>(st.count);
  }

  r.top_keywords = keyword_stats(messages, top_k, lexicon.stopwords);
  return r;
}

void to_json(Json& j, const SummaryReport& v) {
  Json subjects = Json::object();
  for (const auto& [k, n] : v.by_subject) subjects[std::string(to_string(k))] = n;
  Json levels = Json::object();
  for (const auto& [k, n] : v.by_importance) levels[std::string(to_string(k))] = n;
  Json types = Json::object();
  for (const auto& [k, n] : v.by_type_code) types[std::string(to_string(k))] = n;
  Json stats = Json::object();
  for (const auto& [id, st] : v.stream_stats) {
    stats[id] = Json{{"count", st.count}, {"min", nullptr}, {"max", nullptr}, {"mean", nullptr}};
    if (st.min) stats[id]["min"] = *st.min;
    if (st.max) stats[id]["max"] = *st.max;
    if (st.mean) stats[id]["mean"] = *st.mean;
  }
  j = Json{{"period", to_string(v.period)},
           {"period_start", v.period_start},
           {"period_end", v.period_end},
           {"message_count", v.message_count},
           {"unit_count", v.unit_count},
           {"message_counts",
            Json{{"by_subject", subjects}, {"by_importance", levels}, {"by_type_code", types}}},
           {"stream_stats", stats},
           {"top_keywords", v.top_keywords},
           {"pest_mention_count", v.pest_mention_count}};
}

}  // namespace fieldlog::analytics
