#pragma once

#include <json.hpp>

#include "fieldlog/core/error.h"
#include "fieldlog/core/types.h"

// JSON field names mirror the domain type fields (snake_case); timestamps are
// ISO-8601 UTC strings; absent optionals serialize as null. Decoding errors
// throw Error{Validation} with the offending field path.
namespace fieldlog {

using Json = nlohmann::json;

void to_json(Json& j, const Timestamp& v);
void from_json(const Json& j, Timestamp& v);
void to_json(Json& j, const GeoPoint& v);
void from_json(const Json& j, GeoPoint& v);
void to_json(Json& j, const RawLocation& v);
void from_json(const Json& j, RawLocation& v);
void to_json(Json& j, const ClassificationUnit& v);
void from_json(const Json& j, ClassificationUnit& v);
void to_json(Json& j, const Message& v);
void from_json(const Json& j, Message& v);
void to_json(Json& j, const SensorStream& v);
void from_json(const Json& j, SensorStream& v);
void to_json(Json& j, const SensorReading& v);
void from_json(const Json& j, SensorReading& v);
void to_json(Json& j, const Zone& v);
void from_json(const Json& j, Zone& v);
void to_json(Json& j, const User& v);
void from_json(const Json& j, User& v);
void to_json(Json& j, const SubscriptionRule& v);
void from_json(const Json& j, SubscriptionRule& v);
void to_json(Json& j, const DeliveryRecord& v);
void from_json(const Json& j, DeliveryRecord& v);

void to_json(Json& j, Subject v);
void from_json(const Json& j, Subject& v);
void to_json(Json& j, Importance v);
void from_json(const Json& j, Importance& v);
void to_json(Json& j, TypeCode v);
void from_json(const Json& j, TypeCode& v);
void to_json(Json& j, SensorKind v);
void from_json(const Json& j, SensorKind& v);

namespace json_field {

// Helpers shared by module-level decoders. `path` is the dotted location used in
// validation errors ("classification_units[1].subject").
const Json& required(const Json& j, std::string_view key, std::string_view path);
// nullptr when the key is missing or null.
const Json* optional(const Json& j, std::string_view key);
std::string join(std::string_view path, std::string_view key);
std::string as_string(const Json& j, std::string_view path);
double as_number(const Json& j, std::string_view path);
std::int64_t as_integer(const Json& j, std::string_view path);
bool as_bool(const Json& j, std::string_view path);
Timestamp as_timestamp(const Json& j, std::string_view path);
Subject as_subject(const Json& j, std::string_view path);
Importance as_importance(const Json& j, std::string_view path);
TypeCode as_type_code(const Json& j, std::string_view path);
SensorKind as_sensor_kind(const Json& j, std::string_view path);
GeoPoint as_point(const Json& j, std::string_view path);

// Decodes a nested value, re-rooting validation paths under `path`.
template <typename T>
T decode(const Json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Validation) throw;
    const auto& inner = e.field_path();
    throw Error(ErrorCode::Validation, e.what(),
                inner.empty() || path.empty() || inner.front() == '[' ? path + inner : path + "." + inner);
  }
}

}  // namespace json_field

// Parses text as JSON, mapping syntax errors to Error{Validation}.
Json parse_json(std::string_view text);

}  // namespace fieldlog
