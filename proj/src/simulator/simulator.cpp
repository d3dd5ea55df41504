#include "fieldlog/simulator/simulator.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"
#include "fieldlog/ingest/ingest.h"
#include "fieldlog/ingest/sensor_csv.h"

namespace fieldlog::simulator {

using namespace json_field;

std::string_view to_string(EventType t) {
  switch (t) {
    case EventType::CO2Drawdown: return "CO2Drawdown";
    case EventType::FrostNight: return "FrostNight";
    case EventType::StepChange: return "StepChange";
  }
  return "CO2Drawdown";
}

std::optional<EventType> parse_event_type(std::string_view s) {
  if (s == "CO2Drawdown") return EventType::CO2Drawdown;
  if (s == "FrostNight") return EventType::FrostNight;
  if (s == "StepChange") return EventType::StepChange;
  return std::nullopt;
}

double Rng::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::string format_sig6(double v) {
  if (!std::isfinite(v)) throw Error(ErrorCode::Internal, "non-finite simulated value");
  if (v == 0.0) return "0";
  const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(v))));
  int decimals = std::max(0, 5 - exponent);
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // Rounding can carry into a new leading digit (9.999996 -> 10.00000).
  auto significant = [](const std::string& t) {
    const auto first = t.find_first_of("123456789");
    if (first == std::string::npos) return 0L;
    return static_cast<long>(std::count_if(t.begin() + static_cast<long>(first), t.end(),
                                           [](char c) { return c >= '0' && c <= '9'; }));
  };
  if (decimals > 0 && significant(s) > 6) {
    std::snprintf(buf, sizeof buf, "%.*f", decimals - 1, v);
    s = buf;
  }
  if (s.find_first_of("123456789") == std::string::npos) return "0";
  return s;
}

namespace {

Duration as_duration(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return Duration{j.get<std::int64_t>()};
  return parse_duration(as_string(j, path), path);
}

std::string idx(std::string_view key, std::size_t i) {
  return std::string(key) + "[" + std::to_string(i) + "]";
}

const Json& array_field(const Json& j, std::string_view key, std::string_view path) {
  const auto& a = required(j, key, path);
  if (!a.is_array()) fail_validation("expected an array", join(path, key));
  return a;
}

SensorKind default_kind(EventType t) {
  return t == EventType::FrostNight ? SensorKind::Temperature : SensorKind::CO2;
}

Duration default_duration(EventType t) {
  switch (t) {
    case EventType::CO2Drawdown: return Duration{30 * 60};
    case EventType::FrostNight: return Duration{6 * 3600};
    case EventType::StepChange: return Duration{0};
  }
  return Duration{0};
}

}  // namespace

Scenario parse_scenario(const Json& j) {
  if (!j.is_object()) fail_validation("scenario must be a JSON object");
  Scenario sc;
  const auto& seed = required(j, "seed", "");
  if (!seed.is_number_unsigned()) fail_validation("seed must be a non-negative integer", "seed");
  sc.seed = seed.get<std::uint64_t>();
  sc.start = as_timestamp(required(j, "start", ""), "start");
  sc.end = as_timestamp(required(j, "end", ""), "end");
  if (const auto* si = optional(j, "sample_interval")) {
    sc.sample_interval = as_duration(*si, "sample_interval");
  }

  const auto& zones = array_field(j, "zones", "");
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto path = idx("zones", i);
    sc.registry.zones.push_back(decode<Zone>(zones[i], path));
    if (const auto* streams = optional(zones[i], "streams")) {
      if (!streams->is_array()) fail_validation("expected an array", path + ".streams");
      for (std::size_t k = 0; k < streams->size(); ++k) {
        const auto spath = path + "." + idx("streams", k);
        const auto& s = (*streams)[k];
        SensorStream st;
        st.id = as_string(required(s, "id", spath), join(spath, "id"));
        st.kind = as_sensor_kind(required(s, "kind", spath), join(spath, "kind"));
        st.zone_id = sc.registry.zones.back().id;
        if (const auto* d = optional(s, "description")) st.description = as_string(*d, join(spath, "description"));
        sc.registry.streams.push_back(std::move(st));
      }
    }
  }
  if (const auto* users = optional(j, "users")) {
    if (!users->is_array()) fail_validation("expected an array", "users");
    for (std::size_t i = 0; i < users->size(); ++i) {
      sc.registry.users.push_back(decode<User>((*users)[i], idx("users", i)));
    }
  }
  if (const auto* subs = optional(j, "subscriptions")) {
    if (!subs->is_array()) fail_validation("expected an array", "subscriptions");
    for (std::size_t i = 0; i < subs->size(); ++i) {
      sc.registry.subscriptions.push_back(decode<SubscriptionRule>((*subs)[i], idx("subscriptions", i)));
    }
  }

  const auto& models = required(j, "models", "");
  if (!models.is_object()) fail_validation("expected an object keyed by sensor kind", "models");
  for (const auto& [key, m] : models.items()) {
    const auto path = "models." + key;
    const auto kind = parse_sensor_kind(key);
    if (!kind) fail_validation("unknown sensor kind '" + key + "'", path);
    DiurnalModel dm;
    dm.base = as_number(required(m, "base", path), join(path, "base"));
    if (const auto* a = optional(m, "amplitude")) dm.amplitude = as_number(*a, join(path, "amplitude"));
    if (const auto* n = optional(m, "noise_sd")) dm.noise_sd = as_number(*n, join(path, "noise_sd"));
    if (const auto* p = optional(m, "peak_hour")) dm.peak_hour = as_number(*p, join(path, "peak_hour"));
    sc.models[*kind] = dm;
  }

  if (const auto* events = optional(j, "events")) {
    if (!events->is_array()) fail_validation("expected an array", "events");
    for (std::size_t i = 0; i < events->size(); ++i) {
      const auto path = idx("events", i);
      const auto& e = (*events)[i];
      Event ev;
      ev.id = as_string(required(e, "id", path), join(path, "id"));
      ev.zone_id = as_string(required(e, "zone", path), join(path, "zone"));
      const auto type = as_string(required(e, "type", path), join(path, "type"));
      const auto t = parse_event_type(type);
      if (!t) fail_validation("unknown event type '" + type + "'", join(path, "type"));
      ev.type = *t;
      ev.kind = default_kind(ev.type);
      if (const auto* k = optional(e, "kind")) ev.kind = as_sensor_kind(*k, join(path, "kind"));
      else if (ev.type == EventType::StepChange) fail_validation("StepChange needs a kind", join(path, "kind"));
      ev.time = as_timestamp(required(e, "time", path), join(path, "time"));
      ev.magnitude = as_number(required(e, "magnitude", path), join(path, "magnitude"));
      ev.duration = default_duration(ev.type);
      if (const auto* d = optional(e, "duration")) ev.duration = as_duration(*d, join(path, "duration"));
      sc.events.push_back(std::move(ev));
    }
  }

  if (const auto* templates = optional(j, "message_templates")) {
    if (!templates->is_object()) fail_validation("expected an object keyed by event type", "message_templates");
    for (const auto& [key, list] : templates->items()) {
      const auto path = "message_templates." + key;
      const auto t = parse_event_type(key);
      if (!t) fail_validation("unknown event type '" + key + "'", path);
      if (!list.is_array()) fail_validation("expected an array", path);
      for (std::size_t i = 0; i < list.size(); ++i) {
        const auto tpath = path + "[" + std::to_string(i) + "]";
        MessageTemplate mt;
        if (const auto* o = optional(list[i], "offset")) mt.offset = as_duration(*o, join(tpath, "offset"));
        mt.text = as_string(required(list[i], "template", tpath), join(tpath, "template"));
        mt.author_id = as_string(required(list[i], "author", tpath), join(tpath, "author"));
        sc.templates[*t].push_back(std::move(mt));
      }
    }
  }

  if (const auto* bg = optional(j, "background_messages")) {
    if (!bg->is_array()) fail_validation("expected an array", "background_messages");
    for (std::size_t i = 0; i < bg->size(); ++i) {
      const auto path = idx("background_messages", i);
      const auto& b = (*bg)[i];
      BackgroundMessage m;
      m.author_id = as_string(required(b, "author", path), join(path, "author"));
      m.at = as_timestamp(required(b, "at", path), join(path, "at"));
      if (const auto* z = optional(b, "zone")) m.zone_id = as_string(*z, join(path, "zone"));
      m.transcript = as_string(required(b, "transcript", path), join(path, "transcript"));
      sc.background.push_back(std::move(m));
    }
  }
  validate(sc);
  return sc;
}

Scenario parse_scenario_text(std::string_view text) { return parse_scenario(parse_json(text)); }

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot read scenario file " + path.string(), "scenario");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

namespace {

const SensorStream* event_stream(const Scenario& sc, const Event& ev) {
  const SensorStream* found = nullptr;
  for (const auto& s : sc.registry.streams) {
    if (s.zone_id == ev.zone_id && s.kind == ev.kind) {
      if (found) fail_validation("zone " + ev.zone_id + " has several " +
                                 std::string(to_string(ev.kind)) + " streams");
      found = &s;
    }
  }
  return found;
}

const Zone* find_zone(const Scenario& sc, std::string_view id) {
  for (const auto& z : sc.registry.zones) {
    if (z.id == id) return &z;
  }
  return nullptr;
}

bool has_user(const Scenario& sc, std::string_view id) {
  return std::any_of(sc.registry.users.begin(), sc.registry.users.end(),
                     [&](const User& u) { return u.id == id; });
}

constexpr std::int64_t kMaxSamples = 20'000'000;

}  // namespace

void validate(const Scenario& sc) {
  if (!(sc.start < sc.end)) fail_validation("start must be before end", "start");
  if (sc.sample_interval.count() <= 0) fail_validation("sample_interval must be positive", "sample_interval");
  const auto steps = (sc.end - sc.start).count() / sc.sample_interval.count();
  if (steps * static_cast<std::int64_t>(std::max<std::size_t>(1, sc.registry.streams.size())) > kMaxSamples) {
    fail_validation("scenario would generate too many readings", "sample_interval");
  }
  for (const auto& z : sc.registry.zones) validate(z);
  for (const auto& u : sc.registry.users) validate(u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < sc.registry.zones.size(); ++i) {
    if (!ids.insert(sc.registry.zones[i].id).second) fail_validation("duplicate zone id", idx("zones", i));
  }
  ids.clear();
  for (const auto& s : sc.registry.streams) {
    validate(s);
    if (!ids.insert(s.id).second) fail_validation("duplicate stream id " + s.id, "zones");
    if (!sc.models.contains(s.kind)) {
      fail_validation("no model for sensor kind " + std::string(to_string(s.kind)), "models");
    }
  }
  for (const auto& [kind, m] : sc.models) {
    const auto path = "models." + std::string(to_string(kind));
    if (!std::isfinite(m.base) || !std::isfinite(m.amplitude)) fail_validation("must be finite", path);
    if (!std::isfinite(m.noise_sd) || m.noise_sd < 0) fail_validation("noise_sd must be >= 0", join(path, "noise_sd"));
    if (!std::isfinite(m.peak_hour)) fail_validation("must be finite", join(path, "peak_hour"));
  }
  ids.clear();
  for (std::size_t i = 0; i < sc.events.size(); ++i) {
    const auto& ev = sc.events[i];
    const auto path = idx("events", i);
    if (!ids.insert(ev.id).second) fail_validation("duplicate event id", join(path, "id"));
    if (ev.id.empty()) fail_validation("must not be empty", join(path, "id"));
    if (!find_zone(sc, ev.zone_id)) fail_validation("unknown zone " + ev.zone_id, join(path, "zone"));
    if (!event_stream(sc, ev)) {
      fail_validation("zone " + ev.zone_id + " has no " + std::string(to_string(ev.kind)) + " stream",
                      join(path, "kind"));
    }
    if (ev.time < sc.start || !(ev.time < sc.end)) fail_validation("event time outside the span", join(path, "time"));
    if (!std::isfinite(ev.magnitude)) fail_validation("must be finite", join(path, "magnitude"));
    if (ev.type != EventType::StepChange) {
      if (ev.magnitude <= 0) fail_validation("must be positive", join(path, "magnitude"));
      if (ev.duration.count() <= 0) fail_validation("must be positive", join(path, "duration"));
    }
    if (ev.type == EventType::FrostNight && ev.kind != SensorKind::Temperature) {
      fail_validation("FrostNight applies to Temperature streams", join(path, "kind"));
    }
  }
  for (const auto& [type, list] : sc.templates) {
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto path = "message_templates." + std::string(to_string(type)) + "[" + std::to_string(i) + "]";
      if (!has_user(sc, list[i].author_id)) fail_validation("unknown author", join(path, "author"));
      if (text::is_blank(list[i].text)) fail_validation("must not be blank", join(path, "template"));
    }
  }
  for (std::size_t i = 0; i < sc.background.size(); ++i) {
    const auto& b = sc.background[i];
    const auto path = idx("background_messages", i);
    if (!has_user(sc, b.author_id)) fail_validation("unknown author", join(path, "author"));
    if (b.zone_id && !find_zone(sc, *b.zone_id)) fail_validation("unknown zone", join(path, "zone"));
    if (text::is_blank(b.transcript)) fail_validation("must not be blank", join(path, "transcript"));
  }
}

namespace {

double diurnal(const DiurnalModel& m, Timestamp t) {
  const double hour = static_cast<double>(seconds_of_day(t)) / 3600.0;
  return m.base + m.amplitude * std::cos(2.0 * std::numbers::pi * (hour - m.peak_hour) / 24.0);
}

double seconds(Duration d) { return static_cast<double>(d.count()); }

struct ActiveEvent {
  const Event* event;
  double floor_offset = 0.0;  // FrostNight: depth that brings the centre to -magnitude
};

std::pair<Timestamp, Timestamp> affected(const Event& ev, Timestamp scenario_end) {
  switch (ev.type) {
    case EventType::CO2Drawdown:
      return {ev.time, ev.time + ev.duration + kDrawdownHold + kDrawdownRecovery};
    case EventType::FrostNight: {
      const Duration half{ev.duration.count() / 2};
      return {ev.time - half, ev.time + half};
    }
    case EventType::StepChange: return {ev.time, scenario_end};
  }
  return {ev.time, ev.time};
}

double event_offset(const ActiveEvent& a, Timestamp t) {
  const Event& ev = *a.event;
  const double dt = seconds(t - ev.time);
  switch (ev.type) {
    case EventType::CO2Drawdown: {
      const double ramp = seconds(ev.duration);
      const double hold_end = ramp + seconds(kDrawdownHold);
      const double rec_end = hold_end + seconds(kDrawdownRecovery);
      if (dt < 0 || dt > rec_end) return 0.0;
      if (dt <= ramp) return -ev.magnitude * dt / ramp;
      if (dt <= hold_end) return -ev.magnitude;
      return -ev.magnitude * (1.0 - (dt - hold_end) / seconds(kDrawdownRecovery));
    }
    case EventType::FrostNight: {
      const double half = seconds(ev.duration) / 2.0;
      if (std::fabs(dt) > half) return 0.0;
      const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * dt / half));
      return w * a.floor_offset;
    }
    case EventType::StepChange: return dt >= 0 ? ev.magnitude : 0.0;
  }
  return 0.0;
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  return std::string(buf, res.ptr);
}

std::string fill(std::string_view tmpl, const Event& ev, const Zone& zone) {
  const std::map<std::string, std::string> vars = {{"zone", zone.id},
                                                    {"zone_name", zone.name},
                                                    {"magnitude", shortest(ev.magnitude)},
                                                    {"kind", std::string(to_string(ev.kind))},
                                                    {"event", ev.id}};
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

void locate(ingest::MessageSubmission& sub, const Zone& zone) {
  if (!zone.beacon_ids.empty()) {
    sub.beacon_id = *zone.beacon_ids.begin();
  } else if (zone.geofence) {
    GeoPoint c{};
    for (const auto& p : *zone.geofence) {
      c.lat += p.lat;
      c.lon += p.lon;
    }
    c.lat /= static_cast<double>(zone.geofence->size());
    c.lon /= static_cast<double>(zone.geofence->size());
    sub.gps = c;
  }
}

}  // namespace

Output generate(const Scenario& sc) {
  validate(sc);
  Output out;
  out.registry = sc.registry;
  Rng rng(sc.seed);

  std::map<std::string, std::vector<ActiveEvent>> by_stream;
  for (const auto& ev : sc.events) {
    const auto* st = event_stream(sc, ev);
    ActiveEvent a{&ev};
    if (ev.type == EventType::FrostNight) a.floor_offset = -ev.magnitude - diurnal(sc.models.at(st->kind), ev.time);
    by_stream[st->id].push_back(a);
  }

  out.readings_csv = std::string(ingest::kSensorCsvHeader) + "\n";
  for (Timestamp t = sc.start; t < sc.end; t = t + sc.sample_interval) {
    const auto stamp = format_timestamp(t);
    for (const auto& st : sc.registry.streams) {
      const auto& model = sc.models.at(st.kind);
      double v = diurnal(model, t);
      if (auto it = by_stream.find(st.id); it != by_stream.end()) {
        for (const auto& a : it->second) v += event_offset(a, t);
      }
      v += model.noise_sd * rng.normal();
      out.readings_csv += st.id;
      out.readings_csv += ',';
      out.readings_csv += stamp;
      out.readings_csv += ',';
      out.readings_csv += format_sig6(v);
      out.readings_csv += '\n';
    }
  }

  std::vector<ingest::MessageSubmission> subs;
  for (const auto& ev : sc.events) {
    GroundTruthEvent gt;
    gt.event = ev;
    gt.stream_id = event_stream(sc, ev)->id;
    std::tie(gt.affected_start, gt.affected_end) = affected(ev, sc.end);
    const Zone& zone = *find_zone(sc, ev.zone_id);
    if (auto it = sc.templates.find(ev.type); it != sc.templates.end()) {
      std::size_t n = 0;
      for (const auto& mt : it->second) {
        ingest::MessageSubmission sub;
        sub.id = "sim-" + ev.id + "-" + std::to_string(++n);
        sub.author_id = mt.author_id;
        sub.recorded_at = ev.time + mt.offset;
        sub.transcript = fill(mt.text, ev, zone);
        locate(sub, zone);
        gt.message_ids.push_back(*sub.id);
        subs.push_back(std::move(sub));
      }
    }
    out.ground_truth.push_back(std::move(gt));
  }
  std::size_t n = 0;
  for (const auto& b : sc.background) {
    ingest::MessageSubmission sub;
    sub.id = "sim-bg-" + std::to_string(++n);
    sub.author_id = b.author_id;
    sub.recorded_at = b.at;
    sub.transcript = b.transcript;
    if (b.zone_id) locate(sub, *find_zone(sc, *b.zone_id));
    out.background_message_ids.push_back(*sub.id);
    subs.push_back(std::move(sub));
  }
  std::stable_sort(subs.begin(), subs.end(), [](const auto& a, const auto& b) {
    return a.recorded_at < b.recorded_at;
  });
  for (const auto& s : subs) {
    out.submissions_jsonl += Json(s).dump();
    out.submissions_jsonl += '\n';
  }
  return out;
}

Json ground_truth_json(const Output& output) {
  Json events = Json::array();
  for (const auto& gt : output.ground_truth) {
    events.push_back(Json{{"id", gt.event.id},
                          {"zone_id", gt.event.zone_id},
                          {"stream_id", gt.stream_id},
                          {"kind", to_string(gt.event.kind)},
                          {"type", to_string(gt.event.type)},
                          {"time", gt.event.time},
                          {"magnitude", gt.event.magnitude},
                          {"duration_seconds", gt.event.duration.count()},
                          {"affected_start", gt.affected_start},
                          {"affected_end", gt.affected_end},
                          {"message_ids", gt.message_ids}});
  }
  return Json{{"events", events}, {"background_message_ids", output.background_message_ids}};
}

void write_output(const Output& output, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw Error(ErrorCode::Internal, "cannot write " + (dir / name).string());
  };
  put("readings.csv", output.readings_csv);
  put("submissions.jsonl", output.submissions_jsonl);
  put("ground_truth.json", ground_truth_json(output).dump(2) + "\n");
  put("registry.json", Json(output.registry).dump(2) + "\n");
}

}  // namespace fieldlog::simulator
