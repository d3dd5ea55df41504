#include "fieldlog/core/json.h"

#include <cmath>

#include "fieldlog/core/error.h"

namespace fieldlog {

namespace json_field {

std::string join(std::string_view path, std::string_view key) {
  if (path.empty()) return std::string(key);
  std::string out(path);
  out.push_back('.');
  out += key;
  return out;
}

const Json& required(const Json& j, std::string_view key, std::string_view path) {
  if (!j.is_object()) fail_validation("expected an object", std::string(path));
  const auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) fail_validation("missing required field", join(path, key));
  return *it;
}

const Json* optional(const Json& j, std::string_view key) {
  if (!j.is_object()) return nullptr;
  const auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

std::string as_string(const Json& j, std::string_view path) {
  if (!j.is_string()) fail_validation("expected a string", std::string(path));
  return j.get<std::string>();
}

double as_number(const Json& j, std::string_view path) {
  if (!j.is_number()) fail_validation("expected a number", std::string(path));
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail_validation("expected a finite number", std::string(path));
  return v;
}

std::int64_t as_integer(const Json& j, std::string_view path) {
  if (!j.is_number_integer()) fail_validation("expected an integer", std::string(path));
  return j.get<std::int64_t>();
}

bool as_bool(const Json& j, std::string_view path) {
  if (!j.is_boolean()) fail_validation("expected a boolean", std::string(path));
  return j.get<bool>();
}

Timestamp as_timestamp(const Json& j, std::string_view path) {
  const auto s = as_string(j, path);
  const auto t = parse_timestamp(s);
  if (!t) fail_validation("expected YYYY-MM-DDTHH:MM:SSZ, got '" + s + "'", std::string(path));
  return *t;
}

namespace {
template <typename E>
E as_enum(const Json& j, std::string_view path, std::optional<E> (*parse)(std::string_view),
          std::string_view what) {
  const auto s = as_string(j, path);
  const auto v = parse(s);
  if (!v) fail_validation("unknown " + std::string(what) + " '" + s + "'", std::string(path));
  return *v;
}
}  // namespace

Subject as_subject(const Json& j, std::string_view path) {
  return as_enum<Subject>(j, path, parse_subject, "subject");
}
Importance as_importance(const Json& j, std::string_view path) {
  return as_enum<Importance>(j, path, parse_importance, "importance");
}
TypeCode as_type_code(const Json& j, std::string_view path) {
  return as_enum<TypeCode>(j, path, parse_type_code, "type_code");
}
SensorKind as_sensor_kind(const Json& j, std::string_view path) {
  return as_enum<SensorKind>(j, path, parse_sensor_kind, "sensor kind");
}

GeoPoint as_point(const Json& j, std::string_view path) {
  GeoPoint p;
  if (j.is_array() && j.size() == 2) {
    p.lat = as_number(j[0], std::string(path) + "[0]");
    p.lon = as_number(j[1], std::string(path) + "[1]");
  } else {
    p.lat = as_number(required(j, "lat", path), join(path, "lat"));
    p.lon = as_number(required(j, "lon", path), join(path, "lon"));
  }
  return p;
}

}  // namespace json_field

using namespace json_field;

namespace {

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

std::set<std::string> string_set(const Json& j, std::string_view path) {
  if (!j.is_array()) fail_validation("expected an array", std::string(path));
  std::set<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.insert(as_string(j[i], std::string(path) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

}  // namespace

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    fail_validation(std::string("malformed JSON: ") + e.what());
  }
}

void to_json(Json& j, Subject v) { j = to_string(v); }
void from_json(const Json& j, Subject& v) { v = as_subject(j, ""); }
void to_json(Json& j, Importance v) { j = to_string(v); }
void from_json(const Json& j, Importance& v) { v = as_importance(j, ""); }
void to_json(Json& j, TypeCode v) { j = to_string(v); }
void from_json(const Json& j, TypeCode& v) { v = as_type_code(j, ""); }
void to_json(Json& j, SensorKind v) { j = to_string(v); }
void from_json(const Json& j, SensorKind& v) { v = as_sensor_kind(j, ""); }

void to_json(Json& j, const Timestamp& v) { j = format_timestamp(v); }
void from_json(const Json& j, Timestamp& v) { v = as_timestamp(j, ""); }

void to_json(Json& j, const GeoPoint& v) { j = Json{{"lat", v.lat}, {"lon", v.lon}}; }
void from_json(const Json& j, GeoPoint& v) { v = as_point(j, ""); }

void to_json(Json& j, const RawLocation& v) {
  j = Json{{"gps", opt(v.gps)}, {"beacon_id", opt(v.beacon_id)}};
}
void from_json(const Json& j, RawLocation& v) {
  v = {};
  if (const auto* g = optional(j, "gps")) v.gps = as_point(*g, "gps");
  if (const auto* b = optional(j, "beacon_id")) v.beacon_id = as_string(*b, "beacon_id");
}

void to_json(Json& j, const ClassificationUnit& v) {
  j = Json{{"subject", to_string(v.subject)},
           {"importance", to_string(v.importance)},
           {"type_code", to_string(v.type_code)},
           {"source", to_string(v.source)}};
}
void from_json(const Json& j, ClassificationUnit& v) {
  v.subject = as_subject(required(j, "subject", ""), "subject");
  v.importance = as_importance(required(j, "importance", ""), "importance");
  v.type_code = as_type_code(required(j, "type_code", ""), "type_code");
  const auto s = as_string(required(j, "source", ""), "source");
  const auto src = parse_label_source(s);
  if (!src) fail_validation("unknown source '" + s + "'", "source");
  v.source = *src;
}

void to_json(Json& j, const Message& v) {
  j = Json{{"id", v.id},
           {"author_id", v.author_id},
           {"recorded_at", v.recorded_at},
           {"raw_location", v.raw_location},
           {"zone_id", opt(v.zone_id)},
           {"transcript", v.transcript},
           {"audio_ref", opt(v.audio_ref)},
           {"transcription_confidence", opt(v.transcription_confidence)},
           {"classification_units", v.classification_units},
           {"created_at", v.created_at},
           {"warnings", v.warnings}};
}
void from_json(const Json& j, Message& v) {
  v = {};
  v.id = as_string(required(j, "id", ""), "id");
  v.author_id = as_string(required(j, "author_id", ""), "author_id");
  v.recorded_at = as_timestamp(required(j, "recorded_at", ""), "recorded_at");
  if (const auto* r = optional(j, "raw_location")) v.raw_location = decode<RawLocation>(*r, "raw_location");
  if (const auto* z = optional(j, "zone_id")) v.zone_id = as_string(*z, "zone_id");
  v.transcript = as_string(required(j, "transcript", ""), "transcript");
  if (const auto* a = optional(j, "audio_ref")) v.audio_ref = as_string(*a, "audio_ref");
  if (const auto* c = optional(j, "transcription_confidence")) {
    v.transcription_confidence = as_number(*c, "transcription_confidence");
  }
  const auto& units = required(j, "classification_units", "");
  if (!units.is_array()) fail_validation("expected an array", "classification_units");
  for (std::size_t i = 0; i < units.size(); ++i) {
    v.classification_units.push_back(
        decode<ClassificationUnit>(units[i], "classification_units[" + std::to_string(i) + "]"));
  }
  v.created_at = as_timestamp(required(j, "created_at", ""), "created_at");
  if (const auto* w = optional(j, "warnings")) {
    if (!w->is_array()) fail_validation("expected an array", "warnings");
    for (std::size_t i = 0; i < w->size(); ++i) {
      v.warnings.push_back(as_string((*w)[i], "warnings[" + std::to_string(i) + "]"));
    }
  }
}

void to_json(Json& j, const SensorStream& v) {
  j = Json{{"id", v.id},
           {"kind", to_string(v.kind)},
           {"unit", unit_of(v.kind)},
           {"zone_id", v.zone_id},
           {"description", v.description}};
}
void from_json(const Json& j, SensorStream& v) {
  v.id = as_string(required(j, "id", ""), "id");
  v.kind = as_sensor_kind(required(j, "kind", ""), "kind");
  v.zone_id = as_string(required(j, "zone_id", ""), "zone_id");
  const auto* d = optional(j, "description");
  v.description = d ? as_string(*d, "description") : std::string{};
}

void to_json(Json& j, const SensorReading& v) {
  j = Json{{"stream_id", v.stream_id}, {"at", v.at}, {"value", v.value}};
}
void from_json(const Json& j, SensorReading& v) {
  v.stream_id = as_string(required(j, "stream_id", ""), "stream_id");
  v.at = as_timestamp(required(j, "at", ""), "at");
  v.value = as_number(required(j, "value", ""), "value");
}

void to_json(Json& j, const Zone& v) {
  j = Json{{"id", v.id}, {"name", v.name}, {"geofence", opt(v.geofence)},
           {"beacon_ids", v.beacon_ids}};
}
void from_json(const Json& j, Zone& v) {
  v = {};
  v.id = as_string(required(j, "id", ""), "id");
  const auto* n = optional(j, "name");
  v.name = n ? as_string(*n, "name") : v.id;
  if (const auto* g = optional(j, "geofence")) {
    if (!g->is_array()) fail_validation("expected an array of points", "geofence");
    std::vector<GeoPoint> ring;
    for (std::size_t i = 0; i < g->size(); ++i) {
      ring.push_back(as_point((*g)[i], "geofence[" + std::to_string(i) + "]"));
    }
    v.geofence = std::move(ring);
  }
  if (const auto* b = optional(j, "beacon_ids")) v.beacon_ids = string_set(*b, "beacon_ids");
}

void to_json(Json& j, const User& v) {
  j = Json{{"id", v.id}, {"display_name", v.display_name}, {"role", to_string(v.role)}};
}
void from_json(const Json& j, User& v) {
  v.id = as_string(required(j, "id", ""), "id");
  const auto* d = optional(j, "display_name");
  v.display_name = d ? as_string(*d, "display_name") : v.id;
  v.role = Role::Worker;
  if (const auto* r = optional(j, "role")) {
    const auto s = as_string(*r, "role");
    const auto role = parse_role(s);
    if (!role) fail_validation("unknown role '" + s + "'", "role");
    v.role = *role;
  }
}

void to_json(Json& j, const SubscriptionRule& v) {
  Json subjects = nullptr;
  if (v.subject_filter) {
    subjects = Json::array();
    for (const auto s : *v.subject_filter) subjects.push_back(to_string(s));
  }
  j = Json{{"id", v.id},
           {"user_id", v.user_id},
           {"subject_filter", subjects},
           {"zone_filter", opt(v.zone_filter)},
           {"keyword_filter", opt(v.keyword_filter)},
           {"min_importance", v.min_importance ? Json(to_string(*v.min_importance)) : Json(nullptr)}};
}
void from_json(const Json& j, SubscriptionRule& v) {
  v = {};
  v.id = as_string(required(j, "id", ""), "id");
  v.user_id = as_string(required(j, "user_id", ""), "user_id");
  if (const auto* s = optional(j, "subject_filter")) {
    if (!s->is_array()) fail_validation("expected an array", "subject_filter");
    std::set<Subject> subjects;
    for (std::size_t i = 0; i < s->size(); ++i) {
      subjects.insert(as_subject((*s)[i], "subject_filter[" + std::to_string(i) + "]"));
    }
    v.subject_filter = std::move(subjects);
  }
  if (const auto* z = optional(j, "zone_filter")) v.zone_filter = string_set(*z, "zone_filter");
  if (const auto* k = optional(j, "keyword_filter")) {
    v.keyword_filter = string_set(*k, "keyword_filter");
  }
  if (const auto* m = optional(j, "min_importance")) {
    v.min_importance = as_importance(*m, "min_importance");
  }
}

void to_json(Json& j, const DeliveryRecord& v) {
  j = Json{{"message_id", v.message_id},
           {"user_id", v.user_id},
           {"state", to_string(v.state)},
           {"attempts", v.attempts},
           {"last_attempt_at", opt(v.last_attempt_at)}};
}
void from_json(const Json& j, DeliveryRecord& v) {
  v.message_id = as_string(required(j, "message_id", ""), "message_id");
  v.user_id = as_string(required(j, "user_id", ""), "user_id");
  const auto s = as_string(required(j, "state", ""), "state");
  const auto st = parse_delivery_state(s);
  if (!st) fail_validation("unknown state '" + s + "'", "state");
  v.state = *st;
  v.attempts = as_integer(required(j, "attempts", ""), "attempts");
  v.last_attempt_at.reset();
  if (const auto* t = optional(j, "last_attempt_at")) {
    v.last_attempt_at = as_timestamp(*t, "last_attempt_at");
  }
}

}  // namespace fieldlog
