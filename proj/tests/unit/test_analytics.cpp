#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <random>

#include "fieldlog/analytics/anomaly.h"
#include "fieldlog/analytics/correlate.h"
#include "fieldlog/analytics/export.h"
#include "fieldlog/analytics/params.h"
#include "fieldlog/analytics/query.h"
#include "fieldlog/analytics/report.h"
#include "fieldlog/classify/lexicon.h"
#include "fieldlog/core/csv.h"
#include "fieldlog/core/error.h"
#include "fieldlog/ingest/sensor_csv.h"
#include "oracles.h"
#include "random_corpus.h"
#include "test_support.h"

using namespace fieldlog;
using namespace fieldlog::analytics;
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

std::vector<std::string> ids(const std::vector<Message>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.id);
  return out;
}

const classify::Lexicon& lex() { return classify::Lexicon::builtin(); }

std::vector<SensorReading> series(const std::string& id, Timestamp start, Duration step,
                                  const std::vector<double>& values) {
  std::vector<SensorReading> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({id, start + Duration{step.count() * static_cast<long>(i)}, values[i]});
  }
  return out;
}

DetectorParams sharp(double threshold, Duration window) {
  DetectorParams p;
  p.delta_threshold = threshold;
  p.delta_window = window;
  return p;
}

std::vector<AnomalyInterval> breaches(std::vector<AnomalyInterval> all) {
  std::erase_if(all, [](const AnomalyInterval& a) { return a.kind != AnomalyKind::LevelBreach; });
  return all;
}

void put_zones(Store& store, int n) {
  for (int i = 0; i <= n; ++i) store.put_zone(zone("House" + std::to_string(i)));
}

}  // namespace

// ---- query -------------------------------------------------------------------

TEST_CASE("query_messages equals a brute-force scan") {
  TempDir dir;
  Store store(dir.path());
  const auto corpus = random_messages(300, 7);
  store_messages(store, corpus);
  std::mt19937_64 rng(99);
  int non_empty = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto f = random_filter(rng);
    const auto expected = oracle_query(corpus, f);
    const auto got = ids(query_messages(store, f));
    CHECK(got == expected);
    non_empty += !expected.empty();
  }
  CHECK(non_empty > 100);
}

TEST_CASE("query examples") {
  TempDir dir;
  Store store(dir.path());
  const auto corpus = random_messages(120, 3);
  store_messages(store, corpus);
  CHECK(query_messages(store, {}).size() == corpus.size());

  MessageFilter zone_only;
  zone_only.zone_id = "House4";
  MessageFilter kw_only;
  kw_only.keyword = "mildew";
  MessageFilter both = zone_only;
  both.keyword = "mildew";
  auto a = ids(query_messages(store, zone_only));
  auto b = ids(query_messages(store, kw_only));
  auto got = ids(query_messages(store, both));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::sort(got.begin(), got.end());
  std::vector<std::string> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  CHECK(got == inter);
  CHECK_FALSE(got.empty());

  MessageFilter empty_range;
  empty_range.from = empty_range.to = Timestamp{kCorpusStart + 86400};
  CHECK(query_messages(store, empty_range).empty());
  MessageFilter reversed;
  reversed.from = Timestamp{kCorpusStart + 2};
  reversed.to = Timestamp{kCorpusStart + 1};
  CHECK(error_of([&] { query_messages(store, reversed); }).field_path() == "from");
  MessageFilter blank;
  blank.keyword = " ,, ";
  CHECK(error_of([&] { query_messages(store, blank); }).field_path() == "keyword");
  MessageFilter unclassified;
  unclassified.importance_at_least = Importance::Unclassified;
  CHECK(error_of([&] { query_messages(store, unclassified); }).code() == ErrorCode::Validation);
}

TEST_CASE("filter params") {
  const auto f = parse_message_filter({{"user", "owner"},
                                       {"from", "2017-06-01"},
                                       {"to", "2017-06-02T00:00:00Z"},
                                       {"zone", "House4"},
                                       {"keyword", "MilDew"},
                                       {"subject", "FarmProducts"},
                                       {"min_importance", "L4"}});
  CHECK(f.user_id == "owner");
  CHECK(f.from == ts("2017-06-01T00:00:00Z"));
  CHECK(f.to == ts("2017-06-02T00:00:00Z"));
  CHECK(f.keyword == "mildew");
  CHECK(f.subject == Subject::FarmProducts);
  CHECK(f.importance_at_least == Importance::L4);
  CHECK(error_of([] { parse_message_filter({{"subject", "Farm"}}); }).field_path() == "subject");
  CHECK(error_of([] { parse_message_filter({{"min_importance", "Unclassified"}}); }).field_path() ==
        "min_importance");
  CHECK(error_of([] { parse_message_filter({{"from", "June"}}); }).field_path() == "from");
  CHECK(error_of([] { parse_reading_filter({{"from", "2017-06-02"}, {"to", "2017-06-01"}}); })
            .field_path() == "from");
  const auto d = parse_detector_overrides(default_params(SensorKind::CO2),
                                          {{"delta_threshold", "150.5"}, {"delta_window", "1h"},
                                           {"level_high", "2000"}});
  CHECK(d.delta_threshold == 150.5);
  CHECK(d.delta_window == Duration{3600});
  CHECK(d.level_high == 2000.0);
  CHECK(error_of([] { parse_detector_overrides(default_params(SensorKind::CO2), {{"delta_threshold", "0"}}); })
            .field_path() == "delta_threshold");
  CHECK(error_of([] { parse_number("1e400", "x"); }).field_path() == "x");
  CHECK(error_of([] { parse_number("12abc", "x"); }).field_path() == "x");
}

// ---- sensor window -------------------------------------------------------------

TEST_CASE("sensor window") {
  TempDir dir;
  Store store(dir.path());
  put_zones(store, 3);
  store.put_stream({"co2", SensorKind::CO2, "House2", ""});
  store.put_stream({"temp", SensorKind::Temperature, "House2", ""});
  store.put_stream({"other", SensorKind::CO2, "House3", ""});
  const auto t = ts("2017-09-02T12:00:00Z");
  const std::vector<SensorReading> rs{{"co2", t - Duration{3600}, 1},  {"co2", t, 2},
                                      {"co2", t + Duration{3 * 3600}, 3}, {"other", t, 9},
                                      {"temp", t + Duration{7200}, 5},     {"temp", t + Duration{7201}, 6}};
  store.put_readings(rs);
  store.append_message(message("m", "u", t, "House2", "x", {unit(Subject::Others)}), {});
  store.append_message(message("nz", "u", t, std::nullopt, "x", {unit(Subject::Others)}), {});

  const auto w = sensor_window(store, "m", Duration{7200});
  REQUIRE(w.size() == 2);
  REQUIRE(w.at("co2").size() == 2);
  CHECK(w.at("co2")[0].value == 1);
  CHECK(w.at("co2")[1].value == 2);
  REQUIRE(w.at("temp").size() == 1);  // closed upper bound
  CHECK(w.at("temp")[0].value == 5);
  CHECK_FALSE(w.count("other"));

  const auto zero = sensor_window(store, "m", Duration{0});
  CHECK(zero.at("co2").size() == 1);
  CHECK(zero.at("temp").empty());

  CHECK(error_of([&] { sensor_window(store, "nz", Duration{60}); }).code() == ErrorCode::NoZone);
  CHECK(error_of([&] { sensor_window(store, "ghost", Duration{60}); }).code() == ErrorCode::NotFound);
  CHECK(error_of([&] { sensor_window(store, "m", Duration{-1}); }).code() == ErrorCode::Validation);
}

// ---- keyword statistics -------------------------------------------------------------

TEST_CASE("keyword statistics") {
  std::vector<Message> ms;
  for (int i = 0; i < 3; ++i) {
    ms.push_back(message("m" + std::to_string(i), "u", Timestamp{i}, std::nullopt,
                         "The mildew is back " + std::string(i ? "beta" : "alpha"),
                         {unit(Subject::Others)}));
  }
  const std::vector<std::string> stop = {"the", "is"};
  const auto top = keyword_stats(ms, 3, stop);
  REQUIRE(top.size() == 3);
  CHECK(top[0] == KeywordCount{"back", 3});
  CHECK(top[1] == KeywordCount{"mildew", 3});
  CHECK(top[2] == KeywordCount{"beta", 2});
  CHECK(keyword_stats({}, 5, stop).empty());
  CHECK(keyword_stats(ms, 100, stop).size() == 4);

  // Against a direct count on random transcripts.
  const auto corpus = random_messages(200, 12);
  const auto all = keyword_stats(corpus, 100000, lex().stopwords);
  std::map<std::string, std::size_t> expected;
  const std::set<std::string> stops(lex().stopwords.begin(), lex().stopwords.end());
  for (const auto& m : corpus) {
    std::istringstream words(normalized_words(m.transcript));
    std::string w;
    while (words >> w) {
      if (!stops.count(w)) ++expected[w];
    }
  }
  std::map<std::string, std::size_t> got;
  for (const auto& k : all) got[k.token] = k.count;
  CHECK(got == expected);
  CHECK(std::is_sorted(all.begin(), all.end(), [](const KeywordCount& a, const KeywordCount& b) {
    return a.count != b.count ? a.count > b.count : a.token < b.token;
  }));
}

// ---- reports -------------------------------------------------------------

TEST_CASE("period boundaries") {
  CHECK_NOTHROW(validate_period_start(Period::Daily, ts("2017-06-15T00:00:00Z")));
  CHECK(error_of([] { validate_period_start(Period::Daily, ts("2017-06-15T00:00:01Z")); }).field_path() == "start");
  CHECK_NOTHROW(validate_period_start(Period::Weekly, ts("2017-06-05T00:00:00Z")));  // Monday
  CHECK_THROWS(validate_period_start(Period::Weekly, ts("2017-06-04T00:00:00Z")));  // Sunday
  CHECK_NOTHROW(validate_period_start(Period::Weekly, ts("1970-01-05T00:00:00Z")));
  CHECK_NOTHROW(validate_period_start(Period::Weekly, ts("1969-12-29T00:00:00Z")));
  CHECK_NOTHROW(validate_period_start(Period::Monthly, ts("2017-06-01T00:00:00Z")));
  CHECK_THROWS(validate_period_start(Period::Monthly, ts("2017-06-02T00:00:00Z")));
  CHECK(period_end(Period::Monthly, ts("2017-02-01T00:00:00Z")) == ts("2017-03-01T00:00:00Z"));
  CHECK(period_end(Period::Monthly, ts("2016-02-01T00:00:00Z")) == ts("2016-03-01T00:00:00Z"));
  CHECK(period_end(Period::Monthly, ts("2017-12-01T00:00:00Z")) == ts("2018-01-01T00:00:00Z"));
  CHECK(period_end(Period::Weekly, ts("2017-06-05T00:00:00Z")) == ts("2017-06-12T00:00:00Z"));
  CHECK(parse_period("weekly") == Period::Weekly);
  CHECK_FALSE(parse_period("Weekly"));
}

TEST_CASE("empty database gives an all-zero report") {
  TempDir dir;
  Store store(dir.path());
  const auto r = summary_report(store, Period::Daily, ts("2017-06-15T00:00:00Z"), lex());
  CHECK(r.message_count == 0);
  CHECK(r.unit_count == 0);
  CHECK(r.pest_mention_count == 0);
  CHECK(r.top_keywords.empty());
  CHECK(r.by_subject.size() == 6);
  CHECK(r.by_importance.size() == 6);
  CHECK(r.by_type_code.size() == 9);
  for (const auto& [k, n] : r.by_subject) CHECK(n == 0);
  const Json j = r;
  CHECK(j["message_counts"]["by_type_code"]["Unclassified"] == 0);
  CHECK(j["period_end"] == "2017-06-16T00:00:00Z");
}

TEST_CASE("report counts distinct labels per message and axis") {
  TempDir dir;
  Store store(dir.path());
  put_zones(store, 1);
  store.put_stream({"s", SensorKind::CO2, "House1", ""});
  const auto day = ts("2017-06-15T00:00:00Z");
  store.append_message(message("a", "u", day + Duration{10}, std::nullopt, "aphids here",
                               {unit(Subject::FarmProducts, Importance::L3, TypeCode::A0),
                                unit(Subject::FarmProducts, Importance::L4, TypeCode::A0)}),
                       {});
  store.append_message(message("b", "u", day + Duration{20}, std::nullopt, "pump",
                               {unit(Subject::Equipment, Importance::L3, TypeCode::B0)}),
                       {});
  store.append_message(message("late", "u", day + Duration{86400}, std::nullopt, "next day",
                               {unit(Subject::Others)}),
                       {});
  const std::vector<SensorReading> rs{{"s", day, 400}, {"s", day + Duration{60}, 500},
                                      {"s", day + Duration{86400}, 1}};
  store.put_readings(rs);
  const auto r = summary_report(store, Period::Daily, day, lex());
  CHECK(r.message_count == 2);
  CHECK(r.unit_count == 3);
  CHECK(r.by_subject.at(Subject::FarmProducts) == 1);
  CHECK(r.by_subject.at(Subject::Equipment) == 1);
  CHECK(r.by_importance.at(Importance::L3) == 2);
  CHECK(r.by_importance.at(Importance::L4) == 1);
  CHECK(r.by_type_code.at(TypeCode::A0) == 1);
  CHECK(r.pest_mention_count == 1);
  const auto& st = r.stream_stats.at("s");
  CHECK(st.count == 2);
  CHECK(st.min == 400);
  CHECK(st.max == 500);
  CHECK(st.mean == 450);
}

TEST_CASE("daily reports sum to the weekly report") {
  for (std::uint64_t seed : {1, 2, 3}) {
    TempDir dir;
    Store store(dir.path());
    store_messages(store, random_messages(250, seed));
    std::mt19937_64 rng(seed);
    std::vector<SensorReading> rs;
    for (int i = 0; i < 2000; ++i) {
      rs.push_back({"s" + std::to_string(i % 3), Timestamp{kCorpusStart + static_cast<std::int64_t>(rng() % (35 * 86400))},
                    static_cast<double>(rng() % 1000) / 8.0});
    }
    store.put_readings(rs);
    put_zones(store, 1);
    for (int s = 0; s < 3; ++s) store.put_stream({"s" + std::to_string(s), SensorKind::CO2, "House1", ""});

    for (auto monday : {ts("2017-06-05T00:00:00Z"), ts("2017-06-12T00:00:00Z"), ts("2017-06-26T00:00:00Z")}) {
      const auto week = summary_report(store, Period::Weekly, monday, lex(), 100000);
      SummaryReport sum;
      std::map<std::string, std::size_t> kw;
      for (int d = 0; d < 7; ++d) {
        const auto day = summary_report(store, Period::Daily, monday + Duration{d * 86400}, lex(), 100000);
        sum.message_count += day.message_count;
        sum.unit_count += day.unit_count;
        sum.pest_mention_count += day.pest_mention_count;
        for (auto [k, n] : day.by_subject) sum.by_subject[k] += n;
        for (auto [k, n] : day.by_importance) sum.by_importance[k] += n;
        for (auto [k, n] : day.by_type_code) sum.by_type_code[k] += n;
        for (const auto& [id, st] : day.stream_stats) {
          auto& acc = sum.stream_stats[id];
          acc.count += st.count;
          if (st.min) acc.min = acc.min ? std::min(*acc.min, *st.min) : *st.min;
          if (st.max) acc.max = acc.max ? std::max(*acc.max, *st.max) : *st.max;
        }
        for (const auto& k : day.top_keywords) kw[k.token] += k.count;
      }
      CAPTURE(format_timestamp(monday));
      CHECK(week.message_count > 0);
      CHECK(sum.message_count == week.message_count);
      CHECK(sum.unit_count == week.unit_count);
      CHECK(sum.pest_mention_count == week.pest_mention_count);
      CHECK(sum.by_subject == week.by_subject);
      CHECK(sum.by_importance == week.by_importance);
      CHECK(sum.by_type_code == week.by_type_code);
      for (const auto& [id, st] : week.stream_stats) {
        CHECK(sum.stream_stats[id].count == st.count);
        CHECK(sum.stream_stats[id].min == st.min);
        CHECK(sum.stream_stats[id].max == st.max);
      }
      std::map<std::string, std::size_t> week_kw;
      for (const auto& k : week.top_keywords) week_kw[k.token] = k.count;
      CHECK(kw == week_kw);
    }
  }
}

// ---- anomalies -------------------------------------------------------------

TEST_CASE("detector parameters") {
  CHECK(default_params(SensorKind::CO2).delta_threshold == 200);
  CHECK(default_params(SensorKind::CO2).delta_window == Duration{1800});
  CHECK(default_params(SensorKind::Temperature).level_low == 0.0);
  for (auto k : kAllSensorKinds) CHECK_NOTHROW(validate(default_params(k)));
  CHECK(error_of([] { validate(sharp(0, Duration{60})); }).field_path() == "delta_threshold");
  CHECK(error_of([] { validate(sharp(-1, Duration{60})); }).field_path() == "delta_threshold");
  CHECK(error_of([] { validate(sharp(1, Duration{0})); }).field_path() == "delta_window");
  auto p = sharp(1, Duration{60});
  p.level_low = 5;
  p.level_high = 4;
  CHECK(error_of([&] { validate(p); }).field_path() == "level_low");
}

TEST_CASE("constant stream has no anomalies") {
  const auto rs = series("s", ts("2017-09-01T00:00:00Z"), Duration{300}, std::vector<double>(100, 480));
  CHECK(detect_anomalies("s", rs, sharp(0.001, Duration{1800})).empty());
}

TEST_CASE("synthetic CO2 step gives exactly one sharp change") {
  // 900 ppm flat, then linear to 550 over 10 minutes (minute samples), then flat.
  std::vector<double> v(60, 900.0);
  for (int i = 1; i <= 10; ++i) v.push_back(900.0 - 35.0 * i);
  v.insert(v.end(), 60, 550.0);
  const auto rs = series("co2", ts("2017-09-01T00:00:00Z"), Duration{60}, v);
  const auto out = detect_anomalies("co2", rs, sharp(200, Duration{1800}));
  REQUIRE(out.size() == 1);
  CHECK(out[0].kind == AnomalyKind::SharpChange);
  CHECK(out[0].magnitude >= 300);
  CHECK(out[0].magnitude == 350);
  CHECK(out[0].threshold_used == 200);
  CHECK(out[0].start < out[0].end);
  // Oracle interval: union of every qualifying pair.
  const auto u = union_of(all_pairs_sharp(rs, 200, 1800));
  REQUIRE(u.size() == 1);
  CHECK(out[0].start.seconds == u[0].first);
  CHECK(out[0].end.seconds == u[0].second);
}

TEST_CASE("sharp-change merging matches the all-pairs oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SensorReading> rs;
    std::int64_t t = 1504224000;
    double v = 0;
    const int n = 20 + static_cast<int>(rng() % 200);
    for (int i = 0; i < n; ++i) {
      t += 30 + static_cast<std::int64_t>(rng() % 900);
      v += (static_cast<double>(rng() % 2001) - 1000.0) / 100.0;
      if (rng() % 15 == 0) v += (rng() % 2 ? 40.0 : -40.0);
      rs.push_back({"s", Timestamp{t}, v});
    }
    const double threshold = 5.0 + static_cast<double>(rng() % 40);
    const std::int64_t window = 300 + static_cast<std::int64_t>(rng() % 3600);
    const auto out = detect_anomalies("s", rs, sharp(threshold, Duration{window}));
    const auto raw = all_pairs_sharp(rs, threshold, window);
    const auto expected = union_of(raw);
    REQUIRE(out.size() == expected.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].kind == AnomalyKind::SharpChange);
      CHECK(out[i].start.seconds == expected[i].first);
      CHECK(out[i].end.seconds == expected[i].second);
      double mag = 0;
      for (const auto& r : raw) {
        if (r.start >= expected[i].first && r.end <= expected[i].second) mag = std::max(mag, r.delta);
      }
      CHECK(out[i].magnitude == mag);
      if (i > 0) CHECK(out[i - 1].end < out[i].start);
    }
  }
}

TEST_CASE("level breach covers the sub-zero run") {
  // 10-minute samples: 4, 2, 0.5, -1, -3, -2, 1, 3
  const auto start = ts("2017-09-05T18:00:00Z");
  const auto rs = series("t", start, Duration{600}, {4, 2, 0.5, -1, -3, -2, 1, 3});
  auto p = default_params(SensorKind::Temperature);
  const auto out = breaches(detect_anomalies("t", rs, p));
  REQUIRE(out.size() == 1);
  CHECK(out[0].kind == AnomalyKind::LevelBreach);
  CHECK(out[0].start == start + Duration{3 * 600});
  CHECK(out[0].end == start + Duration{6 * 600});
  CHECK(out[0].magnitude == 3);
  CHECK(out[0].threshold_used == 0);

  // A run that lasts to the end, and a single trailing breach.
  const auto tail = series("t", start, Duration{600}, {1, -1, -2});
  const auto t_out = breaches(detect_anomalies("t", tail, p));
  REQUIRE(t_out.size() == 1);
  CHECK(t_out[0].start == start + Duration{600});
  CHECK(t_out[0].end == start + Duration{1200});
  const auto single = series("t", start, Duration{600}, {1, 1, -0.5});
  const auto s_out = breaches(detect_anomalies("t", single, p));
  REQUIRE(s_out.size() == 1);
  CHECK(s_out[0].end == s_out[0].start + Duration{1});

  // Upper level.
  auto hi = sharp(1000, Duration{60});
  hi.level_high = 10;
  const auto h_out = detect_anomalies("t", series("t", start, Duration{600}, {5, 11, 12, 9, 13}), hi);
  REQUIRE(h_out.size() == 2);
  CHECK(h_out[0].magnitude == 2);
  CHECK(h_out[1].magnitude == 3);
}

TEST_CASE("stored-stream anomaly detection") {
  TempDir dir;
  Store store(dir.path());
  put_zones(store, 1);
  store.put_stream({"co2", SensorKind::CO2, "House1", ""});
  const auto start = ts("2017-09-01T00:00:00Z");
  const auto rs = series("co2", start, Duration{300}, {500, 500, 200, 200, 500, 500});
  store.put_readings(rs);
  const auto all = detect_anomalies(store, "co2", std::nullopt, std::nullopt, default_params(SensorKind::CO2));
  CHECK(all.size() == 1);
  const auto first_half = detect_anomalies(store, "co2", start, start + Duration{900}, default_params(SensorKind::CO2));
  REQUIRE(first_half.size() == 1);
  CHECK(first_half[0].end == start + Duration{600});
  CHECK(error_of([&] { detect_anomalies(store, "nope", {}, {}, default_params(SensorKind::CO2)); }).code() ==
        ErrorCode::NotFound);
  CHECK(error_of([&] { detect_anomalies(store, "co2", start + Duration{1}, start, default_params(SensorKind::CO2)); })
            .code() == ErrorCode::Validation);
  const Json j = all[0];
  CHECK(j["kind"] == "SharpChange");
  CHECK(j["stream_id"] == "co2");
}

// ---- correlation -------------------------------------------------------------

TEST_CASE("correlation windows, zones and keyword hits") {
  const std::map<std::string, SensorStream> streams{
      {"co2", {"co2", SensorKind::CO2, "House2", ""}}, {"t", {"t", SensorKind::Temperature, "House2", ""}}};
  const auto start = ts("2017-09-02T23:00:00Z");
  const AnomalyInterval a{"co2", start, start + Duration{1200}, AnomalyKind::SharpChange, 300, 200};
  const auto msg = [&](std::string id, Timestamp at, std::optional<std::string> zone, std::string text) {
    return message(std::move(id), "owner", at, std::move(zone), std::move(text), {unit(Subject::Environment)});
  };
  const std::vector<Message> ms{
      msg("after", a.end + Duration{1800}, "House2", "CO2 dropped a lot after the vents opened"),
      msg("inside", start + Duration{600}, "House2", "checking the fan"),
      msg("before", start - Duration{7200}, "House2", "ventilation opened"),
      msg("edge", a.end + kDefaultMaxGap, "House2", "late note"),
      msg("beyond", a.end + kDefaultMaxGap + Duration{1}, "House2", "CO2"),
      msg("elsewhere", start, "House3", "CO2 low"),
      msg("unzoned", start, std::nullopt, "CO2 low")};
  const std::vector<AnomalyInterval> as{a};
  const auto out = correlate(as, ms, kDefaultMaxGap, streams, lex());
  REQUIRE(out.size() == 4);
  CHECK(out[0].message_id == "inside");
  CHECK(out[0].lag == Duration{0});
  CHECK_FALSE(out[0].keyword_hit);
  CHECK(out[1].message_id == "after");
  CHECK(out[1].lag == Duration{1800});
  CHECK(out[1].keyword_hit);
  CHECK(out[1].zone_id == "House2");
  CHECK(out[2].message_id == "before");
  CHECK(out[2].lag == Duration{-7200});
  CHECK(out[2].keyword_hit);
  CHECK(out[3].message_id == "edge");

  const Json j = out[2];
  CHECK(j["lag_seconds"] == -7200);
  CHECK(j["anomaly"]["stream_id"] == "co2");

  const AnomalyInterval unknown{"zzz", start, start + Duration{1}, AnomalyKind::SharpChange, 1, 1};
  const std::vector<AnomalyInterval> bad{unknown};
  CHECK(error_of([&] { correlate(bad, ms, kDefaultMaxGap, streams, lex()); }).code() == ErrorCode::Validation);
}

TEST_CASE("correlate is independent of input order") {
  std::mt19937_64 rng(5);
  const std::map<std::string, SensorStream> streams{{"a", {"a", SensorKind::CO2, "House1", ""}},
                                                    {"b", {"b", SensorKind::Temperature, "House2", ""}}};
  auto corpus = random_messages(150, 9);
  std::vector<AnomalyInterval> as;
  for (int i = 0; i < 40; ++i) {
    const Timestamp s{kCorpusStart + static_cast<std::int64_t>(rng() % (30 * 86400))};
    as.push_back({i % 2 ? "a" : "b", s, s + Duration{60 + static_cast<long>(rng() % 7200)},
                  i % 3 ? AnomalyKind::SharpChange : AnomalyKind::LevelBreach, 1.0, 1.0});
  }
  const auto key = [](const std::vector<Correlation>& cs) {
    std::vector<std::string> out;
    for (const auto& c : cs) {
      out.push_back(c.message_id + "|" + c.anomaly.stream_id + "|" + std::to_string(c.anomaly.start.seconds) +
                    "|" + std::to_string(c.lag.count()) + "|" + std::to_string(c.keyword_hit));
    }
    return out;
  };
  const auto base = key(correlate(as, corpus, Duration{3 * 3600}, streams, lex()));
  CHECK(base.size() > 10);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(as.begin(), as.end(), rng);
    std::shuffle(corpus.begin(), corpus.end(), rng);
    CHECK(key(correlate(as, corpus, Duration{3 * 3600}, streams, lex())) == base);
  }
}

// ---- export -------------------------------------------------------------

TEST_CASE("empty exports are header-only") {
  TempDir dir;
  Store store(dir.path());
  CHECK(export_messages_csv(store, {}) == std::string(kMessagesCsvHeader) + "\n");
  CHECK(export_readings_csv(store, {}) == std::string(kReadingsCsvHeader) + "\n");
}

TEST_CASE("readings export re-ingests with inserted=0") {
  TempDir dir;
  Store store(dir.path());
  std::mt19937_64 rng(1);
  std::vector<SensorReading> rs;
  put_zones(store, 2);
  for (int s = 0; s < 3; ++s) {
    store.put_stream({"s" + std::to_string(s), SensorKind::Humidity, "House" + std::to_string(s), ""});
    for (int i = 0; i < 300; ++i) {
      const double v = std::ldexp(static_cast<double>(rng() % 2000000) - 1000000.0, -static_cast<int>(rng() % 30));
      rs.push_back({"s" + std::to_string(s), Timestamp{kCorpusStart + i * 300}, v});
    }
  }
  store.put_readings(rs);
  const auto csv = export_readings_csv(store, {});
  const auto report = ingest::ingest_sensor_csv(store, csv);
  CHECK(report.inserted == 0);
  CHECK(report.skipped_duplicates == rs.size());
  CHECK(report.row_errors.empty());

  // Values parse back to the identical double.
  TempDir dir2;
  Store copy(dir2.path());
  put_zones(copy, 0);
  for (int s = 0; s < 3; ++s) copy.put_stream({"s" + std::to_string(s), SensorKind::Humidity, "House0", ""});
  CHECK(ingest::ingest_sensor_csv(copy, csv).inserted == rs.size());
  const auto a = store.read([](ReadSession& s) { return s.list_readings(); });
  const auto b = copy.read([](ReadSession& s) { return s.list_readings(); });
  CHECK(a == b);

  ReadingFilter f;
  f.stream_id = "s1";
  f.from = Timestamp{kCorpusStart + 300};
  f.to = Timestamp{kCorpusStart + 900};
  CHECK(export_readings_csv(store, f) ==
        std::string(kReadingsCsvHeader) + "\ns1,2017-06-01T00:05:00Z," + format_value(rs[301].value) +
            "\n" + "s1,2017-06-01T00:10:00Z," + format_value(rs[302].value) + "\n");
  ReadingFilter zf;
  zf.zone_id = "House2";
  const auto zone_csv = export_readings_csv(store, zf);
  CHECK(std::count(zone_csv.begin(), zone_csv.end(), '\n') == 301);
  ReadingFilter empty;
  empty.from = empty.to = Timestamp{kCorpusStart};
  CHECK(export_readings_csv(store, empty) == std::string(kReadingsCsvHeader) + "\n");
}

TEST_CASE("format_value is the shortest exact decimal") {
  CHECK(format_value(0.1) == "0.1");
  CHECK(format_value(-3) == "-3");
  CHECK(format_value(1e21) == "1000000000000000000000");
  CHECK(format_value(1.5e-7) == "0.00000015");
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20000; ++i) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v) || std::fabs(v) > 1e30 || (v != 0 && std::fabs(v) < 1e-30)) continue;
    const auto s = format_value(v);
    CHECK(s.find_first_of("eE") == std::string::npos);
    CHECK(ingest::parse_decimal(s) == v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("messages export parses back field for field") {
  TempDir dir;
  Store store(dir.path());
  auto corpus = random_messages(150, 4180);
  const std::vector<std::string> nasty = {"a,b", "say \"hi\"", "line1\nline2", "cr\r\nlf", "\"\"", ",",
                                          "  padded  ", "=1+1", "\xE6\x97\xA5\xE6\x9C\xAC", "tab\there"};
  std::mt19937_64 rng(8);
  for (auto& m : corpus) {
    for (int k = 0; k < 3; ++k) m.transcript += nasty[rng() % nasty.size()];
  }
  store_messages(store, corpus);
  const auto csv_text = export_messages_csv(store, {});
  const auto rows = csv::parse(csv_text);
  REQUIRE(!rows.empty());
  CHECK(rows[0].fields == std::vector<std::string>{"message_id", "recorded_at", "author_id", "zone_id",
                                                   "subject", "importance", "type_code", "transcript"});
  std::vector<std::vector<std::string>> expected;
  auto sorted = corpus;
  std::sort(sorted.begin(), sorted.end(), [](const Message& a, const Message& b) {
    return a.recorded_at != b.recorded_at ? a.recorded_at < b.recorded_at : a.id < b.id;
  });
  for (const auto& m : sorted) {
    for (const auto& u : m.classification_units) {
      expected.push_back({m.id, format_timestamp(m.recorded_at), m.author_id, m.zone_id.value_or(""),
                          std::string(to_string(u.subject)), std::string(to_string(u.importance)),
                          std::string(to_string(u.type_code)), m.transcript});
    }
  }
  REQUIRE(rows.size() == expected.size() + 1);
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK_FALSE(rows[i + 1].error);
    CHECK(rows[i + 1].fields == expected[i]);
  }

  MessageFilter f;
  f.keyword = "mildew";
  const auto filtered = csv::parse(export_messages_csv(store, f));
  std::size_t units = 0;
  for (const auto& m : query_messages(store, f)) units += m.classification_units.size();
  CHECK(filtered.size() == units + 1);
}
