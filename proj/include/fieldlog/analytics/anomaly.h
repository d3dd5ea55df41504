#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"

namespace fieldlog::analytics {

enum class AnomalyKind { SharpChange, LevelBreach };

std::string_view to_string(AnomalyKind k);

struct AnomalyInterval {
  std::string stream_id;
  Timestamp start;
  Timestamp end;  // start < end
  AnomalyKind kind = AnomalyKind::SharpChange;
  double magnitude = 0.0;
  double threshold_used = 0.0;

  friend bool operator==(const AnomalyInterval&, const AnomalyInterval&) = default;
};

struct DetectorParams {
  double delta_threshold = 0.0;  // stream units, > 0
  Duration delta_window{0};      // > 0
  std::optional<double> level_low;
  std::optional<double> level_high;
};

// Configuration defaults per sensor kind (not measured values):
//   CO2 200 ppm / 30 min; Temperature 5 °C / 30 min with frost level_low 0 °C;
//   Humidity 20 %RH / 30 min; SolarRadiation 600 W/m² / 30 min;
//   SoilMoisture 10 % / 30 min.
DetectorParams default_params(SensorKind kind);

void validate(const DetectorParams& params);

// SharpChange: every pair of readings at most delta_window apart whose values
// differ by >= delta_threshold spans an interval; overlapping or touching
// intervals merge; magnitude is the largest such difference inside.
// LevelBreach: maximal runs of consecutive readings below level_low (or above
// level_high); the interval runs from the first breaching reading to the first
// reading after the run (or to the run's last reading, padded by one second
// when the run is a single trailing reading); magnitude is the deepest
// excursion past the level.
// `readings` must be time-ascending. Output sorted by (start, kind).
std::vector<AnomalyInterval> detect_anomalies(std::string_view stream_id,
                                              std::span<const SensorReading> readings,
                                              const DetectorParams& params);

std::vector<AnomalyInterval> detect_anomalies(const Store& store, std::string_view stream_id,
                                              std::optional<Timestamp> from,
                                              std::optional<Timestamp> to,
                                              const DetectorParams& params);

void to_json(Json& j, const AnomalyInterval& v);

}  // namespace fieldlog::analytics
