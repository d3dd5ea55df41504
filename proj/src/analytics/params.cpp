#include "fieldlog/analytics/params.h"

#include <charconv>
#include <cmath>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::analytics {

namespace {

const std::string* find(const Params& p, const char* key) {
  auto it = p.find(key);
  return it == p.end() ? nullptr : &it->second;
}

}  // namespace

double parse_number(const std::string& text, const std::string& field) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty() || !std::isfinite(v)) {
    fail_validation("expected a number, got '" + text + "'", field);
  }
  return v;
}

MessageFilter parse_message_filter(const Params& p) {
  MessageFilter f;
  if (const auto* v = find(p, "user")) f.user_id = *v;
  if (const auto* v = find(p, "from")) f.from = parse_instant(*v, "from");
  if (const auto* v = find(p, "to")) f.to = parse_instant(*v, "to");
  if (const auto* v = find(p, "zone")) f.zone_id = *v;
  if (const auto* v = find(p, "keyword")) f.keyword = text::case_fold(*v);
  if (const auto* v = find(p, "subject")) {
    f.subject = parse_subject(*v);
    if (!f.subject) fail_validation("unknown subject '" + *v + "'", "subject");
  }
  if (const auto* v = find(p, "min_importance")) {
    f.importance_at_least = parse_importance(*v);
    if (!f.importance_at_least || *f.importance_at_least == Importance::Unclassified) {
      fail_validation("expected L1..L5, got '" + *v + "'", "min_importance");
    }
  }
  validate(f);
  return f;
}

ReadingFilter parse_reading_filter(const Params& p) {
  ReadingFilter f;
  if (const auto* v = find(p, "stream")) f.stream_id = *v;
  if (const auto* v = find(p, "zone")) f.zone_id = *v;
  if (const auto* v = find(p, "from")) f.from = parse_instant(*v, "from");
  if (const auto* v = find(p, "to")) f.to = parse_instant(*v, "to");
  validate(f);
  return f;
}

DetectorParams parse_detector_overrides(DetectorParams base, const Params& p) {
  if (const auto* v = find(p, "delta_threshold")) base.delta_threshold = parse_number(*v, "delta_threshold");
  if (const auto* v = find(p, "delta_window")) base.delta_window = parse_duration(*v, "delta_window");
  if (const auto* v = find(p, "level_low")) base.level_low = parse_number(*v, "level_low");
  if (const auto* v = find(p, "level_high")) base.level_high = parse_number(*v, "level_high");
  validate(base);
  return base;
}

}  // namespace fieldlog::analytics
