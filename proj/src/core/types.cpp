#include "fieldlog/core/types.h"

#include <algorithm>
#include <cmath>

#include "fieldlog/core/error.h"
#include "fieldlog/core/geometry.h"
#include "fieldlog/core/text.h"

namespace fieldlog {
namespace {

template <typename E, std::size_t N>
std::optional<E> lookup(std::string_view s, const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

constexpr std::array<std::string_view, 6> kSubjectNames = {
    "FarmProducts", "Equipment", "SalesMarketing", "Environment", "System", "Others"};
constexpr std::array<std::string_view, 6> kImportanceNames = {"L1", "L2", "L3", "L4", "L5",
                                                              "Unclassified"};
constexpr std::array<std::string_view, 9> kTypeCodeNames = {"A0", "A1", "A2", "B0", "B1",
                                                            "B2", "C1", "C2", "Unclassified"};
constexpr std::array<std::string_view, 2> kSourceNames = {"Rule", "Manual"};
constexpr std::array<std::string_view, 5> kKindNames = {"Temperature", "Humidity", "CO2",
                                                        "SolarRadiation", "SoilMoisture"};
constexpr std::array<std::string_view, 3> kRoleNames = {"Owner", "Worker", "Advisor"};
constexpr std::array<std::string_view, 3> kStateNames = {"Pending", "Delivered", "Acknowledged"};
constexpr std::array<std::string_view, 5> kUnits = {"°C", "%RH", "ppm", "W/m²", "%"};

void require_id(std::string_view id, std::string_view path) {
  if (text::is_blank(id)) fail_validation("identifier must be non-empty", std::string(path));
}

}  // namespace

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::TranscriptionFailed: return "TranscriptionFailed";
    case ErrorCode::NoZone: return "NoZone";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

std::string_view to_string(Subject v) { return kSubjectNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Importance v) { return kImportanceNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(TypeCode v) { return kTypeCodeNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(LabelSource v) { return kSourceNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(SensorKind v) { return kKindNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Role v) { return kRoleNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(DeliveryState v) { return kStateNames[static_cast<std::size_t>(v)]; }

std::optional<Subject> parse_subject(std::string_view s) { return lookup<Subject>(s, kSubjectNames); }
std::optional<Importance> parse_importance(std::string_view s) {
  return lookup<Importance>(s, kImportanceNames);
}
std::optional<TypeCode> parse_type_code(std::string_view s) {
  return lookup<TypeCode>(s, kTypeCodeNames);
}
std::optional<LabelSource> parse_label_source(std::string_view s) {
  return lookup<LabelSource>(s, kSourceNames);
}
std::optional<SensorKind> parse_sensor_kind(std::string_view s) {
  return lookup<SensorKind>(s, kKindNames);
}
std::optional<Role> parse_role(std::string_view s) { return lookup<Role>(s, kRoleNames); }
std::optional<DeliveryState> parse_delivery_state(std::string_view s) {
  return lookup<DeliveryState>(s, kStateNames);
}

std::string_view unit_of(SensorKind kind) { return kUnits[static_cast<std::size_t>(kind)]; }

void validate(const ClassificationUnit& u, std::string_view path) {
  // Enums are closed; only out-of-range casts can break them.
  if (static_cast<std::size_t>(u.subject) >= kSubjectNames.size()) {
    fail_validation("unknown subject", std::string(path) + ".subject");
  }
  if (static_cast<std::size_t>(u.importance) >= kImportanceNames.size()) {
    fail_validation("unknown importance", std::string(path) + ".importance");
  }
  if (static_cast<std::size_t>(u.type_code) >= kTypeCodeNames.size()) {
    fail_validation("unknown type_code", std::string(path) + ".type_code");
  }
}

void validate(const Message& m) {
  require_id(m.id, "id");
  require_id(m.author_id, "author_id");
  if (text::is_blank(m.transcript)) fail_validation("transcript must be non-empty", "transcript");
  if (m.classification_units.empty()) {
    fail_validation("at least one classification unit is required", "classification_units");
  }
  for (std::size_t i = 0; i < m.classification_units.size(); ++i) {
    validate(m.classification_units[i], "classification_units[" + std::to_string(i) + "]");
  }
  if (m.transcription_confidence &&
      !(*m.transcription_confidence >= 0.0 && *m.transcription_confidence <= 1.0)) {
    fail_validation("confidence must lie in [0,1]", "transcription_confidence");
  }
  if (m.raw_location.gps) {
    const auto& p = *m.raw_location.gps;
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 ||
        std::abs(p.lon) > 180.0) {
      fail_validation("gps point outside WGS84 range", "raw_location.gps");
    }
  }
  if (m.recorded_at > m.created_at) {
    fail_validation("recorded_at is later than created_at", "recorded_at");
  }
}

void validate(const SensorStream& s) {
  require_id(s.id, "id");
  require_id(s.zone_id, "zone_id");
}

void validate(const SensorReading& r) {
  require_id(r.stream_id, "stream_id");
  if (!std::isfinite(r.value)) fail_validation("value must be finite", "value");
}

void validate(const Zone& z) {
  require_id(z.id, "id");
  if (z.geofence && !geometry::is_simple_polygon(*z.geofence)) {
    fail_validation("geofence must be a simple polygon of at least 3 WGS84 vertices", "geofence");
  }
  for (const auto& b : z.beacon_ids) require_id(b, "beacon_ids");
}

void validate(const User& u) { require_id(u.id, "id"); }

void validate(const SubscriptionRule& r) {
  require_id(r.id, "id");
  require_id(r.user_id, "user_id");
  if (!r.subject_filter && !r.zone_filter && !r.keyword_filter && !r.min_importance) {
    fail_validation("at least one filter is required", "");
  }
  if (r.subject_filter && r.subject_filter->empty()) {
    fail_validation("empty filter set", "subject_filter");
  }
  if (r.zone_filter && r.zone_filter->empty()) fail_validation("empty filter set", "zone_filter");
  if (r.keyword_filter) {
    if (r.keyword_filter->empty()) fail_validation("empty filter set", "keyword_filter");
    for (const auto& k : *r.keyword_filter) {
      if (text::tokenize(k).empty()) fail_validation("keyword has no word characters", "keyword_filter");
      if (k != text::case_fold(k)) fail_validation("keywords must be case-folded", "keyword_filter");
    }
  }
  if (r.min_importance == Importance::Unclassified) {
    fail_validation("min_importance must be one of L1..L5", "min_importance");
  }
}

void validate(const DeliveryRecord& d) {
  require_id(d.message_id, "message_id");
  require_id(d.user_id, "user_id");
  if (d.attempts < 0) fail_validation("attempts must be >= 0", "attempts");
}

Importance max_importance(const Message& m) {
  Importance best = Importance::Unclassified;
  for (const auto& u : m.classification_units) {
    if (importance_rank(u.importance) > importance_rank(best)) best = u.importance;
  }
  return best;
}

}  // namespace fieldlog
