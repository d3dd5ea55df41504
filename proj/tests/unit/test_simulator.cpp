#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fieldlog/analytics/anomaly.h"
#include "fieldlog/core/csv.h"
#include "fieldlog/core/error.h"
#include "fieldlog/simulator/simulator.h"
#include "sim_pipeline.h"
#include "test_support.h"

using namespace fieldlog;
using namespace fieldlog::simulator;
using namespace fieldlog::testing;

namespace {

Error error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an Error");
  return Error(ErrorCode::Internal, "");
}

// One house with every sensor kind; no events, modest noise.
Json base_scenario() {
  return parse_json(R"({
    "seed": 11,
    "start": "2017-09-01T00:00:00Z",
    "end": "2017-09-04T00:00:00Z",
    "sample_interval": "5m",
    "zones": [{"id": "House1", "name": "House 1", "beacon_ids": ["b1"],
               "streams": [{"id": "t", "kind": "Temperature"}, {"id": "rh", "kind": "Humidity"},
                           {"id": "co2", "kind": "CO2"}, {"id": "sun", "kind": "SolarRadiation"},
                           {"id": "soil", "kind": "SoilMoisture"}]},
              {"id": "House2", "name": "House 2", "beacon_ids": ["b2"], "streams": []}],
    "users": [{"id": "owner", "display_name": "Owner", "role": "Owner"}],
    "models": {
      "Temperature": {"base": 12, "amplitude": 6, "noise_sd": 0.2, "peak_hour": 5},
      "Humidity": {"base": 75, "amplitude": 15, "noise_sd": 1, "peak_hour": 17},
      "CO2": {"base": 480, "amplitude": 80, "noise_sd": 4, "peak_hour": 20},
      "SolarRadiation": {"base": 320, "amplitude": 300, "noise_sd": 5, "peak_hour": 3},
      "SoilMoisture": {"base": 35, "amplitude": 3, "noise_sd": 0.3, "peak_hour": 9}
    }
  })");
}

std::vector<SensorReading> readings_of(const Output& out, const std::string& stream) {
  std::vector<SensorReading> rs;
  const auto rows = csv::parse(out.readings_csv);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].fields[0] != stream) continue;
    rs.push_back({stream, ts(rows[i].fields[1].c_str()), std::stod(rows[i].fields[2])});
  }
  return rs;
}

std::vector<analytics::AnomalyInterval> detect(const Output& out, const std::string& stream, SensorKind kind) {
  const auto rs = readings_of(out, stream);
  return analytics::detect_anomalies(stream, rs, analytics::default_params(kind));
}

}  // namespace

TEST_CASE("generation is deterministic") {
  const auto sc = load_scenario(data_path("scenarios/demo.json"));
  const auto a = generate(sc);
  const auto b = generate(sc);
  CHECK(a.readings_csv == b.readings_csv);
  CHECK(a.submissions_jsonl == b.submissions_jsonl);
  CHECK(ground_truth_json(a) == ground_truth_json(b));
  auto other = sc;
  other.seed = sc.seed + 1;
  CHECK(generate(other).readings_csv != a.readings_csv);
  CHECK(generate(other).submissions_jsonl == a.submissions_jsonl);

  TempDir d1, d2;
  write_output(a, d1.path());
  write_output(b, d2.path());
  for (const char* f : {"readings.csv", "submissions.jsonl", "ground_truth.json", "registry.json"}) {
    CHECK(read_file(d1.path() / f) == read_file(d2.path() / f));
  }
  CHECK_NOTHROW(ingest::parse_registry(parse_json(read_file(d1.path() / "registry.json"))));
}

TEST_CASE("readings follow the sample grid") {
  const auto out = generate(parse_scenario(base_scenario()));
  const auto rows = csv::parse(out.readings_csv);
  CHECK(rows[0].fields == std::vector<std::string>{"stream_id", "timestamp", "value"});
  CHECK(rows.size() == 1 + 5 * 3 * 288);
  const auto t = readings_of(out, "t");
  REQUIRE(t.size() == 3 * 288);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i].at - t[i - 1].at == Duration{300});
  CHECK(t.front().at == ts("2017-09-01T00:00:00Z"));
  CHECK(t.back().at == ts("2017-09-03T23:55:00Z"));
}

TEST_CASE("noiseless diurnal values") {
  auto j = base_scenario();
  for (auto& [k, m] : j["models"].items()) m["noise_sd"] = 0;
  const auto out = generate(parse_scenario(j));
  const auto t = readings_of(out, "t");
  // base 12, amplitude 6, peak at 05:00
  CHECK(t[5 * 12].value == doctest::Approx(18.0));
  CHECK(t[17 * 12].value == doctest::Approx(6.0));
  CHECK(t[11 * 12].value == doctest::Approx(12.0).epsilon(1e-5));
}

TEST_CASE("no events and no noise produces no anomalies") {
  auto j = base_scenario();
  for (auto& [k, m] : j["models"].items()) m["noise_sd"] = 0;
  const auto out = generate(parse_scenario(j));
  for (const auto& st : out.registry.streams) {
    CAPTURE(st.id);
    CHECK(detect(out, st.id, st.kind).empty());
  }
  CHECK(out.ground_truth.empty());
  CHECK(out.submissions_jsonl.empty());
}

TEST_CASE("a single CO2 drawdown is detected once") {
  auto j = base_scenario();
  j["events"] = Json::array({Json{{"id", "dd"}, {"zone", "House1"}, {"type", "CO2Drawdown"},
                                  {"time", "2017-09-02T09:00:00Z"}, {"magnitude", 300}, {"duration", "10m"}}});
  const auto out = generate(parse_scenario(j));
  REQUIRE(out.ground_truth.size() == 1);
  const auto& gt = out.ground_truth[0];
  CHECK(gt.stream_id == "co2");
  CHECK(gt.affected_start == ts("2017-09-02T09:00:00Z"));
  CHECK(gt.affected_end == ts("2017-09-02T14:10:00Z"));
  const auto found = detect(out, "co2", SensorKind::CO2);
  REQUIRE(found.size() == 1);
  CHECK(found[0].kind == analytics::AnomalyKind::SharpChange);
  CHECK(found[0].start <= gt.affected_end);
  CHECK(gt.affected_start <= found[0].end);
  CHECK(found[0].magnitude > 250);
  for (const auto& st : out.registry.streams) {
    if (st.id != "co2") CHECK(detect(out, st.id, st.kind).empty());
  }
}

TEST_CASE("a frost night breaches the low level once") {
  auto j = base_scenario();
  j["events"] = Json::array({Json{{"id", "frost"}, {"zone", "House1"}, {"type", "FrostNight"},
                                  {"time", "2017-09-02T18:00:00Z"}, {"magnitude", 3}, {"duration", "6h"}}});
  const auto out = generate(parse_scenario(j));
  const auto& gt = out.ground_truth.at(0);
  CHECK(gt.stream_id == "t");
  CHECK(gt.affected_start == ts("2017-09-02T15:00:00Z"));
  CHECK(gt.affected_end == ts("2017-09-02T21:00:00Z"));
  const auto found = detect(out, "t", SensorKind::Temperature);
  REQUIRE(found.size() == 1);
  CHECK(found[0].kind == analytics::AnomalyKind::LevelBreach);
  double lowest = 1e9;
  for (const auto& r : readings_of(out, "t")) {
    if (gt.affected_start <= r.at && r.at <= gt.affected_end) lowest = std::min(lowest, r.value);
  }
  CHECK(lowest < 0);
  CHECK(lowest == doctest::Approx(-3.0).epsilon(0.3));
  CHECK(found[0].start >= gt.affected_start);
  CHECK(found[0].end <= gt.affected_end);
}

TEST_CASE("step change offsets the rest of the span") {
  auto j = base_scenario();
  for (auto& [k, m] : j["models"].items()) m["noise_sd"] = 0;
  j["events"] = Json::array({Json{{"id", "s"}, {"zone", "House1"}, {"type", "StepChange"}, {"kind", "Humidity"},
                                  {"time", "2017-09-02T00:00:00Z"}, {"magnitude", -25}}});
  const auto out = generate(parse_scenario(j));
  CHECK(out.ground_truth.at(0).affected_end == ts("2017-09-04T00:00:00Z"));
  const auto rh = readings_of(out, "rh");
  CHECK(rh[288].value - rh[0].value == doctest::Approx(-25.0));
  CHECK(rh[2 * 288 + 7].value - rh[288 + 7].value == doctest::Approx(0.0));
  CHECK(detect(out, "rh", SensorKind::Humidity).size() == 1);
}

TEST_CASE("ground truth accounts for every submission exactly once") {
  const auto sc = load_scenario(data_path("scenarios/acceptance_30d.json"));
  const auto out = generate(sc);
  std::multiset<std::string> listed;
  for (const auto& gt : out.ground_truth) listed.insert(gt.message_ids.begin(), gt.message_ids.end());
  listed.insert(out.background_message_ids.begin(), out.background_message_ids.end());
  std::multiset<std::string> submitted;
  std::istringstream lines(out.submissions_jsonl);
  std::string line;
  Timestamp prev{0};
  while (std::getline(lines, line)) {
    const auto sub = parse_json(line).get<ingest::MessageSubmission>();
    submitted.insert(*sub.id);
    CHECK(prev <= sub.recorded_at);
    prev = sub.recorded_at;
  }
  CHECK(submitted == listed);
  for (const auto& id : listed) CHECK(listed.count(id) == 1);
  CHECK(out.ground_truth.size() == sc.events.size());
  CHECK_FALSE(listed.empty());

  const auto gt = ground_truth_json(out);
  CHECK(gt["events"].size() == sc.events.size());
  CHECK(gt["events"][0].contains("affected_start"));
}

TEST_CASE("simulated submissions land in their zones and correlate") {
  TempDir dir;
  Store store(dir.path());
  const auto out = generate(load_scenario(data_path("scenarios/demo.json")));
  const auto r = run_pipeline(store, out);
  CHECK(r.truth_pairs == 2);
  CHECK(r.recovered_pairs == r.truth_pairs);
  CHECK(r.out_of_gap == 0);
  CHECK(r.zone_mismatch == 0);
  for (const auto& gt : out.ground_truth) {
    for (const auto& id : gt.message_ids) CHECK(store.get_message(id)->zone_id == gt.event.zone_id);
  }
  const auto bg = store.get_message("sim-bg-1");
  REQUIRE(bg);
  CHECK(bg->zone_id == "House2");
}

TEST_CASE("malformed scenarios") {
  const auto e = error_of([] { parse_scenario_text("{\n  \"seed\": 1,\n  \"start\": ,\n}"); });
  CHECK(e.code() == ErrorCode::Validation);
  CHECK(std::string(e.what()).find("line 3") != std::string::npos);

  auto j = base_scenario();
  j["events"] = Json::array({Json{{"id", "x"}, {"zone", "House9"}, {"type", "CO2Drawdown"},
                                  {"time", "2017-09-02T00:00:00Z"}, {"magnitude", 1}}});
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "events[0].zone");
  j["events"][0]["zone"] = "House2";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "events[0].kind");
  j["events"][0]["zone"] = "House1";
  j["events"][0]["type"] = "Hail";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "events[0].type");
  j["events"][0]["type"] = "FrostNight";
  j["events"][0]["kind"] = "CO2";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "events[0].kind");
  j["events"][0].erase("kind");
  j["events"][0]["time"] = "2017-09-05T00:00:00Z";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "events[0].time");

  j = base_scenario();
  j["models"].erase("CO2");
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "models");
  j = base_scenario();
  j["models"]["CO2"]["noise_sd"] = -1;
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "models.CO2.noise_sd");
  j = base_scenario();
  j["end"] = "2017-09-01T00:00:00Z";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "start");
  j = base_scenario();
  j["sample_interval"] = "-5m";
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "sample_interval");
  j = base_scenario();
  j["background_messages"] = Json::array({Json{{"author", "ghost"}, {"at", "2017-09-02T00:00:00Z"},
                                               {"transcript", "hello"}}});
  CHECK(error_of([&] { parse_scenario(j); }).field_path() == "background_messages[0].author");
}

TEST_CASE("six significant digits") {
  CHECK(format_sig6(0.0) == "0");
  CHECK(format_sig6(-0.0) == "0");
  CHECK(format_sig6(123.456789) == "123.457");
  CHECK(format_sig6(-3.0) == "-3.00000");
  CHECK(format_sig6(9.9999996) == "10.0000");
  CHECK(format_sig6(999999.7) == "1000000");
  CHECK(format_sig6(0.000123456789) == "0.000123457");
  CHECK(format_sig6(1234567.0) == "1234567");
  CHECK_THROWS(format_sig6(std::nan("")));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-8, 8);
  for (int i = 0; i < 20000; ++i) {
    const double v = mant(rng) * std::pow(10.0, expo(rng));
    const auto s = format_sig6(v);
    CHECK(s.find_first_of("eE") == std::string::npos);
    CHECK(s != "-0");
    CHECK(ingest::parse_decimal(s).has_value());
    CHECK(std::fabs(std::stod(s) - v) <= std::fabs(v) * 5e-6);
  }
}

TEST_CASE("random source") {
  Rng a(42), b(42);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = a.uniform();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(b.uniform() == u);
    const double z = a.normal();
    sum += z;
    sq += z * z;
    b.normal();
  }
  CHECK(sum / 20000 == doctest::Approx(0.0).epsilon(0.05).scale(1));
  CHECK(sq / 20000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bundled scenarios load") {
  const auto demo = load_scenario(data_path("scenarios/demo.json"));
  CHECK(demo.events.size() == 2);
  CHECK(demo.registry.streams.size() == 5);
  CHECK(demo.sample_interval == Duration{300});
  const auto acc = load_scenario(data_path("scenarios/acceptance_30d.json"));
  CHECK(acc.end - acc.start == Duration{30 * 86400});
  CHECK(acc.events.size() >= 4);
  CHECK(error_of([] { load_scenario("/nonexistent/scenario.json"); }).field_path() == "scenario");
}
