#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fieldlog/analytics/anomaly.h"
#include "fieldlog/classify/lexicon.h"
#include "fieldlog/core/json.h"
#include "fieldlog/core/types.h"

namespace fieldlog::analytics {

struct Correlation {
  AnomalyInterval anomaly;
  std::string message_id;
  std::string zone_id;
  // Signed distance from the nearest point of [start, end] to recorded_at:
  // negative before the anomaly, zero inside, positive after.
  Duration lag{0};
  bool keyword_hit = false;
};

inline constexpr Duration kDefaultMaxGap{6 * 3600};

// Pairs every anomaly with every message in the same zone (zone taken from the
// anomaly's stream) whose |lag| <= max_gap. keyword_hit is set when the
// transcript contains a lexicon term for the stream's sensor kind. Sorted by
// |lag|, then message id, stream id, start, kind; independent of input order.
std::vector<Correlation> correlate(std::span<const AnomalyInterval> anomalies,
                                   std::span<const Message> messages, Duration max_gap,
                                   const std::map<std::string, SensorStream>& streams,
                                   const classify::Lexicon& lexicon);

void to_json(Json& j, const Correlation& v);

}  // namespace fieldlog::analytics
