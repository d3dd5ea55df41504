#include "fieldlog/analytics/correlate.h"

#include <algorithm>
#include <tuple>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::analytics {

namespace {

Duration signed_lag(const AnomalyInterval& a, Timestamp t) {
  if (t < a.start) return t - a.start;
  if (a.end < t) return t - a.end;
  return Duration{0};
}

bool mentions_kind(std::span<const std::string> tokens, SensorKind kind,
                   const classify::Lexicon& lexicon) {
  auto it = lexicon.kind_terms.find(kind);
  if (it == lexicon.kind_terms.end()) return false;
  return std::any_of(it->second.begin(), it->second.end(), [&](const classify::Term& term) {
    return text::count_term(tokens, term.tokens) > 0;
  });
}

}  // namespace

std::vector<Correlation> correlate(std::span<const AnomalyInterval> anomalies,
                                   std::span<const Message> messages, Duration max_gap,
                                   const std::map<std::string, SensorStream>& streams,
                                   const classify::Lexicon& lexicon) {
  if (max_gap.count() < 0) fail_validation("max_gap must be non-negative", "max_gap");
  std::map<std::string, std::vector<std::pair<const Message*, std::vector<std::string>>>> by_zone;
  for (const auto& m : messages) {
    if (m.zone_id) by_zone[*m.zone_id].emplace_back(&m, text::tokenize(m.transcript));
  }
  std::vector<Correlation> out;
  for (const auto& a : anomalies) {
    auto s = streams.find(a.stream_id);
    if (s == streams.end()) fail_validation("unknown stream " + a.stream_id, "stream_id");
    auto z = by_zone.find(s->second.zone_id);
    if (z == by_zone.end()) continue;
    for (const auto& [m, tokens] : z->second) {
      const Duration lag = signed_lag(a, m->recorded_at);
      if (std::chrono::abs(lag) > max_gap) continue;
      out.push_back({a, m->id, s->second.zone_id, lag, mentions_kind(tokens, s->second.kind, lexicon)});
    }
  }
  std::sort(out.begin(), out.end(), [](const Correlation& x, const Correlation& y) {
    auto key = [](const Correlation& c) {
      return std::tie(c.message_id, c.anomaly.stream_id, c.anomaly.start, c.anomaly.kind,
                      c.anomaly.end);
    };
    const auto ax = std::chrono::abs(x.lag), ay = std::chrono::abs(y.lag);
    if (ax != ay) return ax < ay;
    if (x.lag != y.lag) return x.lag < y.lag;
    return key(x) < key(y);
  });
  return out;
}

void to_json(Json& j, const Correlation& v) {
  j = Json{{"anomaly", v.anomaly},
           {"message_id", v.message_id},
           {"zone_id", v.zone_id},
           {"lag_seconds", v.lag.count()},
           {"keyword_hit", v.keyword_hit}};
}

}  // namespace fieldlog::analytics
