#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/types.h"
#include "fieldlog/ingest/registry.h"

namespace fieldlog::simulator {

enum class EventType { CO2Drawdown, FrostNight, StepChange };

std::string_view to_string(EventType t);
std::optional<EventType> parse_event_type(std::string_view s);

// value(t) = base + amplitude * cos(2π (hour_of_day(t) - peak_hour) / 24) + N(0, noise_sd)
struct DiurnalModel {
  double base = 0.0;
  double amplitude = 0.0;
  double noise_sd = 0.0;
  double peak_hour = 14.0;
};

// Shapes, added to the noiseless diurnal value before noise:
//   CO2Drawdown  linear ramp down by `magnitude` over `duration`, a 2 h hold,
//                then a linear 3 h recovery.
//   FrostNight   raised-cosine dip of width `duration` centred on `time`; its
//                floor sits at -magnitude (°C).
//   StepChange   permanent offset of `magnitude` from `time` on.
struct Event {
  std::string id;
  std::string zone_id;
  SensorKind kind = SensorKind::CO2;
  EventType type = EventType::CO2Drawdown;
  Timestamp time;
  double magnitude = 0.0;
  Duration duration{0};
};

inline constexpr Duration kDrawdownHold{2 * 3600};
inline constexpr Duration kDrawdownRecovery{3 * 3600};

// Placeholders: {zone}, {zone_name}, {magnitude}, {kind}, {event}.
struct MessageTemplate {
  Duration offset{0};
  std::string text;
  std::string author_id;
};

struct BackgroundMessage {
  std::string author_id;
  Timestamp at;
  std::optional<std::string> zone_id;  // unzoned when absent
  std::string transcript;
};

struct Scenario {
  std::uint64_t seed = 0;
  Timestamp start;
  Timestamp end;  // exclusive
  Duration sample_interval{300};
  ingest::Registry registry;
  std::map<SensorKind, DiurnalModel> models;
  std::vector<Event> events;
  std::map<EventType, std::vector<MessageTemplate>> templates;
  std::vector<BackgroundMessage> background;
};

// Throws Error{Validation} with a field path; malformed JSON text reports its
// line and column.
Scenario parse_scenario(const Json& j);
Scenario parse_scenario_text(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
void validate(const Scenario& scenario);

struct GroundTruthEvent {
  Event event;
  std::string stream_id;
  Timestamp affected_start;
  Timestamp affected_end;
  std::vector<std::string> message_ids;
};

struct Output {
  std::string readings_csv;       // ingest-ready sensor CSV
  std::string submissions_jsonl;  // ingest-ready MessageSubmission lines
  std::vector<GroundTruthEvent> ground_truth;
  std::vector<std::string> background_message_ids;
  ingest::Registry registry;
};

// Deterministic for a given scenario: PRNG is std::mt19937_64 seeded with
// `seed`, normals come from the Box-Muller transform, draws happen in
// time-major, stream-declaration order.
Output generate(const Scenario& scenario);

Json ground_truth_json(const Output& output);

// Writes readings.csv, submissions.jsonl, ground_truth.json, registry.json.
void write_output(const Output& output, const std::filesystem::path& dir);

// Six significant digits, fixed notation, never "-0".
std::string format_sig6(double v);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace fieldlog::simulator
