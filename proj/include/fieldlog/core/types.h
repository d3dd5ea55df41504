#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/time.h"

namespace fieldlog {

// Subject axis.
enum class Subject { FarmProducts, Equipment, SalesMarketing, Environment, System, Others };

// Importance axis. Leveled members are ordered L1 < L2 < ... < L5; Unclassified is
// not comparable and never satisfies a minimum-importance predicate.
enum class Importance { L1, L2, L3, L4, L5, Unclassified };

// Statement type: letter = record/action/consideration, digit = none/quantitative/qualitative.
enum class TypeCode { A0, A1, A2, B0, B1, B2, C1, C2, Unclassified };

enum class LabelSource { Rule, Manual };

enum class SensorKind { Temperature, Humidity, CO2, SolarRadiation, SoilMoisture };

enum class Role { Owner, Worker, Advisor };

enum class DeliveryState { Pending, Delivered, Acknowledged };

inline constexpr std::array kAllSubjects = {Subject::FarmProducts, Subject::Equipment,
                                            Subject::SalesMarketing, Subject::Environment,
                                            Subject::System, Subject::Others};
inline constexpr std::array kAllImportance = {Importance::L1, Importance::L2, Importance::L3,
                                              Importance::L4, Importance::L5,
                                              Importance::Unclassified};
inline constexpr std::array kAllTypeCodes = {TypeCode::A0, TypeCode::A1, TypeCode::A2,
                                             TypeCode::B0, TypeCode::B1, TypeCode::B2,
                                             TypeCode::C1, TypeCode::C2, TypeCode::Unclassified};
inline constexpr std::array kAllSensorKinds = {SensorKind::Temperature, SensorKind::Humidity,
                                               SensorKind::CO2, SensorKind::SolarRadiation,
                                               SensorKind::SoilMoisture};

std::string_view to_string(Subject v);
std::string_view to_string(Importance v);
std::string_view to_string(TypeCode v);
std::string_view to_string(LabelSource v);
std::string_view to_string(SensorKind v);
std::string_view to_string(Role v);
std::string_view to_string(DeliveryState v);

std::optional<Subject> parse_subject(std::string_view s);
std::optional<Importance> parse_importance(std::string_view s);
std::optional<TypeCode> parse_type_code(std::string_view s);
std::optional<LabelSource> parse_label_source(std::string_view s);
std::optional<SensorKind> parse_sensor_kind(std::string_view s);
std::optional<Role> parse_role(std::string_view s);
std::optional<DeliveryState> parse_delivery_state(std::string_view s);

std::string_view unit_of(SensorKind kind);

// 1..5 for leveled importance, 0 for Unclassified.
constexpr int importance_rank(Importance v) {
  return v == Importance::Unclassified ? 0 : static_cast<int>(v) + 1;
}

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct RawLocation {
  std::optional<GeoPoint> gps;
  std::optional<std::string> beacon_id;

  friend bool operator==(const RawLocation&, const RawLocation&) = default;
};

struct ClassificationUnit {
  Subject subject = Subject::Others;
  Importance importance = Importance::Unclassified;
  TypeCode type_code = TypeCode::Unclassified;
  LabelSource source = LabelSource::Rule;

  friend bool operator==(const ClassificationUnit&, const ClassificationUnit&) = default;
};

struct Message {
  std::string id;
  std::string author_id;
  Timestamp recorded_at;
  RawLocation raw_location;
  std::optional<std::string> zone_id;
  std::string transcript;
  std::optional<std::string> audio_ref;
  std::optional<double> transcription_confidence;
  std::vector<ClassificationUnit> classification_units;
  Timestamp created_at;
  // Non-fatal ingest diagnostics, e.g. an unregistered beacon.
  std::vector<std::string> warnings;

  friend bool operator==(const Message&, const Message&) = default;
};

struct SensorStream {
  std::string id;
  SensorKind kind = SensorKind::Temperature;
  std::string zone_id;
  std::string description;

  friend bool operator==(const SensorStream&, const SensorStream&) = default;
};

struct SensorReading {
  std::string stream_id;
  Timestamp at;
  double value = 0.0;

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

struct Zone {
  std::string id;
  std::string name;
  std::optional<std::vector<GeoPoint>> geofence;
  std::set<std::string> beacon_ids;

  friend bool operator==(const Zone&, const Zone&) = default;
};

struct User {
  std::string id;
  std::string display_name;
  Role role = Role::Worker;

  friend bool operator==(const User&, const User&) = default;
};

struct SubscriptionRule {
  std::string id;
  std::string user_id;
  std::optional<std::set<Subject>> subject_filter;
  std::optional<std::set<std::string>> zone_filter;
  std::optional<std::set<std::string>> keyword_filter;  // case-folded
  std::optional<Importance> min_importance;              // L1..L5 only

  friend bool operator==(const SubscriptionRule&, const SubscriptionRule&) = default;
};

struct DeliveryRecord {
  std::string message_id;
  std::string user_id;
  DeliveryState state = DeliveryState::Pending;
  std::int64_t attempts = 0;
  std::optional<Timestamp> last_attempt_at;

  friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

// Invariant checks. Each throws Error{Validation} with a field path.
void validate(const Message& m);
void validate(const ClassificationUnit& u, std::string_view path = "classification_units");
void validate(const SensorStream& s);
void validate(const SensorReading& r);
void validate(const Zone& z);
void validate(const User& u);
void validate(const SubscriptionRule& r);
void validate(const DeliveryRecord& d);

// Maximum leveled importance across a message's units (Unclassified if none).
Importance max_importance(const Message& m);

}  // namespace fieldlog
