#include "fieldlog/analytics/anomaly.h"

#include <algorithm>
#include <cmath>

#include "fieldlog/core/error.h"

namespace fieldlog::analytics {

std::string_view to_string(AnomalyKind k) {
  return k == AnomalyKind::SharpChange ? "SharpChange" : "LevelBreach";
}

DetectorParams default_params(SensorKind kind) {
  using std::chrono::minutes;
  switch (kind) {
    case SensorKind::CO2: return {200.0, minutes{30}, std::nullopt, std::nullopt};
    case SensorKind::Temperature: return {5.0, minutes{30}, 0.0, std::nullopt};
    case SensorKind::Humidity: return {20.0, minutes{30}, std::nullopt, std::nullopt};
    case SensorKind::SolarRadiation: return {600.0, minutes{30}, std::nullopt, std::nullopt};
    case SensorKind::SoilMoisture: return {10.0, minutes{30}, std::nullopt, std::nullopt};
  }
  return {};
}

void validate(const DetectorParams& p) {
  if (!std::isfinite(p.delta_threshold) || p.delta_threshold <= 0.0) {
    fail_validation("delta threshold must be positive", "delta_threshold");
  }
  if (p.delta_window.count() <= 0) fail_validation("delta window must be positive", "delta_window");
  if (p.level_low && !std::isfinite(*p.level_low)) fail_validation("level must be finite", "level_low");
  if (p.level_high && !std::isfinite(*p.level_high)) {
    fail_validation("level must be finite", "level_high");
  }
  if (p.level_low && p.level_high && *p.level_low >= *p.level_high) {
    fail_validation("level_low must be below level_high", "level_low");
  }
}

namespace {

void sharp_changes(std::string_view stream_id, std::span<const SensorReading> rs,
                   const DetectorParams& p, std::vector<AnomalyInterval>& out) {
  std::vector<AnomalyInterval> raw;
  std::size_t lo = 0;
  for (std::size_t j = 0; j < rs.size(); ++j) {
    while (rs[j].at - rs[lo].at > p.delta_window) ++lo;
    std::optional<std::size_t> first;
    double mag = 0.0;
    for (std::size_t i = lo; i < j; ++i) {
      if (!(rs[i].at < rs[j].at)) continue;
      const double d = std::fabs(rs[j].value - rs[i].value);
      if (d >= p.delta_threshold) {
        if (!first) first = i;
        mag = std::max(mag, d);
      }
    }
    if (first) {
      raw.push_back({std::string(stream_id), rs[*first].at, rs[j].at, AnomalyKind::SharpChange,
                     mag, p.delta_threshold});
    }
  }
  std::sort(raw.begin(), raw.end(),
            [](const auto& a, const auto& b) { return a.start < b.start; });
  for (auto& iv : raw) {
    if (!out.empty() && out.back().kind == AnomalyKind::SharpChange && iv.start <= out.back().end) {
      out.back().end = std::max(out.back().end, iv.end);
      out.back().magnitude = std::max(out.back().magnitude, iv.magnitude);
    } else {
      out.push_back(std::move(iv));
    }
  }
}

template <typename Breach>
void level_runs(std::string_view stream_id, std::span<const SensorReading> rs, double level,
                Breach depth, std::vector<AnomalyInterval>& out) {
  std::size_t i = 0;
  while (i < rs.size()) {
    if (depth(rs[i].value) <= 0.0) {
      ++i;
      continue;
    }
    const std::size_t begin = i;
    double mag = 0.0;
    while (i < rs.size() && depth(rs[i].value) > 0.0) mag = std::max(mag, depth(rs[i++].value));
    Timestamp end = i < rs.size() ? rs[i].at : rs[i - 1].at;
    if (!(rs[begin].at < end)) end = rs[begin].at + Duration{1};
    out.push_back({std::string(stream_id), rs[begin].at, end, AnomalyKind::LevelBreach, mag, level});
  }
}

}  // namespace

std::vector<AnomalyInterval> detect_anomalies(std::string_view stream_id,
                                              std::span<const SensorReading> readings,
                                              const DetectorParams& params) {
  validate(params);
  std::vector<AnomalyInterval> out;
  sharp_changes(stream_id, readings, params, out);
  if (params.level_low) {
    const double lo = *params.level_low;
    level_runs(stream_id, readings, lo, [lo](double v) { return lo - v; }, out);
  }
  if (params.level_high) {
    const double hi = *params.level_high;
    level_runs(stream_id, readings, hi, [hi](double v) { return v - hi; }, out);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.kind < b.kind;
  });
  return out;
}

std::vector<AnomalyInterval> detect_anomalies(const Store& store, std::string_view stream_id,
                                              std::optional<Timestamp> from,
                                              std::optional<Timestamp> to,
                                              const DetectorParams& params) {
  validate(params);
  if (from && to && *from > *to) fail_validation("from must not be later than to", "from");
  auto readings = store.read([&](ReadSession& s) {
    if (!s.get_stream(stream_id)) fail_not_found("no stream " + std::string(stream_id));
    ReadingQuery q;
    q.stream_id = std::string(stream_id);
    q.from = from;
    q.to = to;
    return s.list_readings(q);
  });
  return detect_anomalies(stream_id, readings, params);
}

void to_json(Json& j, const AnomalyInterval& v) {
  j = Json{{"stream_id", v.stream_id},   {"start", v.start},
           {"end", v.end},               {"kind", to_string(v.kind)},
           {"magnitude", v.magnitude},   {"threshold_used", v.threshold_used}};
}

}  // namespace fieldlog::analytics
