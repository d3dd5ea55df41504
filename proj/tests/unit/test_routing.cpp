#include <doctest.h>

#include <algorithm>
#include <random>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"
#include "fieldlog/routing/routing.h"
#include "oracles.h"
#include "test_support.h"

using namespace fieldlog;
using namespace fieldlog::routing;
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

SubscriptionRule rule(std::string id, std::string user) {
  SubscriptionRule r;
  r.id = std::move(id);
  r.user_id = std::move(user);
  return r;
}

Message mildew_message() {
  return message("m1", "u1", ts("2017-06-10T09:00:00Z"), "House4",
                 "White mildew on the young leaves, I removed them",
                 {unit(Subject::FarmProducts, Importance::L5, TypeCode::A2)});
}

std::set<std::string> match(const Message& m, std::vector<SubscriptionRule> rules) {
  return match_subscribers(m, rules);
}

// Independent reading of the rule predicate.
bool oracle_rule(const SubscriptionRule& r, const Message& m) {
  if (r.subject_filter) {
    bool any = false;
    for (const auto& u : m.classification_units) any = any || r.subject_filter->count(u.subject);
    if (!any) return false;
  }
  if (r.zone_filter && (!m.zone_id || !r.zone_filter->count(*m.zone_id))) return false;
  if (r.keyword_filter) {
    bool any = false;
    for (const auto& k : *r.keyword_filter) any = any || oracle_keyword(m.transcript, k);
    if (!any) return false;
  }
  if (r.min_importance) {
    int best = 0;
    for (const auto& u : m.classification_units) best = std::max(best, oracle_rank(u.importance));
    if (best == 0 || best < oracle_rank(*r.min_importance)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("single filters") {
  const auto m = mildew_message();
  auto r = rule("r1", "u2");
  r.subject_filter = std::set<Subject>{Subject::FarmProducts};
  CHECK(match(m, {r}) == std::set<std::string>{"u2"});
  r.subject_filter = std::set<Subject>{Subject::Equipment};
  CHECK(match(m, {r}).empty());

  r = rule("r1", "u2");
  r.zone_filter = std::set<std::string>{"House4", "House5"};
  CHECK(match(m, {r}).size() == 1);
  auto unzoned = m;
  unzoned.zone_id.reset();
  CHECK(match(unzoned, {r}).empty());

  r = rule("r1", "u2");
  r.keyword_filter = std::set<std::string>{"mildew"};
  r.min_importance = Importance::L4;
  CHECK(match(m, {r}) == std::set<std::string>{"u2"});
  r.min_importance = Importance::L5;
  CHECK(match(m, {r}).size() == 1);
  auto low = m;
  low.classification_units[0].importance = Importance::L3;
  CHECK(match(low, {r}).empty());
  auto unclassified = m;
  unclassified.classification_units[0].importance = Importance::Unclassified;
  r.min_importance = Importance::L1;
  CHECK(match(unclassified, {r}).empty());

  r = rule("r1", "u2");
  r.keyword_filter = std::set<std::string>{"mild"};
  CHECK(match(m, {r}).empty());
  r.keyword_filter = std::set<std::string>{"young leaves"};
  CHECK(match(m, {r}).size() == 1);
}

TEST_CASE("set semantics and author exclusion") {
  const auto m = mildew_message();
  auto a = rule("r1", "u2");
  a.subject_filter = std::set<Subject>{Subject::FarmProducts};
  auto b = rule("r2", "u2");
  b.zone_filter = std::set<std::string>{"House4"};
  auto self = rule("r3", "u1");
  self.zone_filter = std::set<std::string>{"House4"};
  auto c = rule("r4", "u3");
  c.keyword_filter = std::set<std::string>{"removed"};
  CHECK(match(m, {a, b, self, c}) == std::set<std::string>{"u2", "u3"});
}

TEST_CASE("rule matching properties over random rules and messages") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> coin(0, 1), d6(0, 5), d5(0, 4), d4(0, 3);
  const std::vector<std::string> words = {"mildew", "fan", "tomato", "leaves", "broken", "co2"};
  const std::vector<std::string> zones = {"House1", "House2", "House3"};
  const std::vector<std::string> users = {"u1", "u2", "u3", "u4"};
  for (int trial = 0; trial < 300; ++trial) {
    Message m = message("m", users[d4(rng)], ts("2017-06-10T09:00:00Z"),
                        coin(rng) ? std::optional<std::string>(zones[d4(rng) % 3]) : std::nullopt,
                        words[d6(rng)] + " and " + words[d6(rng)] + ".",
                        {unit(kAllSubjects[d6(rng)], kAllImportance[d6(rng)])});
    if (coin(rng)) m.classification_units.push_back(unit(kAllSubjects[d6(rng)], kAllImportance[d6(rng)]));
    std::vector<SubscriptionRule> rules;
    const int n = 1 + d5(rng);
    for (int i = 0; i < n; ++i) {
      auto r = rule("r" + std::to_string(i), users[d4(rng)]);
      if (coin(rng)) r.subject_filter = std::set<Subject>{kAllSubjects[d6(rng)], kAllSubjects[d6(rng)]};
      if (coin(rng)) r.zone_filter = std::set<std::string>{zones[d4(rng) % 3]};
      if (coin(rng)) r.keyword_filter = std::set<std::string>{words[d6(rng)]};
      if (coin(rng) || (!r.subject_filter && !r.zone_filter && !r.keyword_filter)) {
        r.min_importance = kAllImportance[d5(rng)];
      }
      rules.push_back(r);
    }
    std::set<std::string> expected;
    for (const auto& r : rules) {
      if (oracle_rule(r, m) && r.user_id != m.author_id) expected.insert(r.user_id);
    }
    const auto got = match_subscribers(m, rules);
    CHECK(got == expected);
    CHECK_FALSE(got.count(m.author_id));

    auto shuffled = rules;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(match_subscribers(m, shuffled) == got);

    // Adding a filter never enlarges a rule's matches.
    const auto tokens = text::tokenize(m.transcript);
    for (auto r : rules) {
      const bool before = rule_matches(r, m, tokens);
      if (!r.zone_filter) r.zone_filter = std::set<std::string>{"House1"};
      else if (!r.keyword_filter) r.keyword_filter = std::set<std::string>{"fan"};
      else if (!r.min_importance) r.min_importance = Importance::L3;
      if (!before) CHECK_FALSE(rule_matches(r, m, tokens));
    }
  }
}

TEST_CASE("distribute, inbox and acknowledge") {
  TempDir dir;
  Store store(dir.path());
  for (const char* u : {"u1", "u2", "u3", "u4"}) store.put_user(user(u));
  auto r2 = rule("r2", "u2");
  r2.zone_filter = std::set<std::string>{"House4"};
  auto r3 = rule("r3", "u3");
  r3.keyword_filter = std::set<std::string>{"mildew"};
  store.put_rule(r2);
  store.put_rule(r3);

  const auto m1 = mildew_message();
  auto m2 = mildew_message();
  m2.id = "m0";  // same time, smaller id
  auto quiet = m1;
  quiet.id = "m9";
  quiet.zone_id.reset();
  quiet.transcript = "nothing to report";

  store.write([&](WriteSession& s) {
    s.insert_message(m1);
    CHECK(distribute(s, m1).size() == 2);
    s.insert_message(m2);
    distribute(s, m2);
    s.insert_message(quiet);
    CHECK(distribute(s, quiet).empty());
  });
  CHECK(store.get_message("m9"));

  // Replaying distribution never duplicates.
  store.write([&](WriteSession& s) { CHECK(distribute(s, m1).size() == 2); });
  store.read([](ReadSession& s) { CHECK(s.list_deliveries(std::nullopt, "m1").size() == 2); });

  const auto t0 = ts("2017-06-11T00:00:00Z");
  auto inbox = fetch_inbox(store, "u2", std::nullopt, t0);
  REQUIRE(inbox.size() == 2);
  CHECK(inbox[0].message.id == "m0");
  CHECK(inbox[1].message.id == "m1");
  CHECK(inbox[0].delivery.state == DeliveryState::Delivered);
  CHECK(inbox[0].delivery.attempts == 1);
  CHECK(inbox[0].delivery.last_attempt_at == t0);

  inbox = fetch_inbox(store, "u2", std::nullopt, t0 + Duration{60});
  REQUIRE(inbox.size() == 2);
  CHECK(inbox[1].delivery.attempts == 2);

  const auto acked = acknowledge(store, "u2", "m0");
  CHECK(acked.state == DeliveryState::Acknowledged);
  CHECK(acknowledge(store, "u2", "m0") == acked);
  inbox = fetch_inbox(store, "u2", std::nullopt, t0);
  REQUIRE(inbox.size() == 1);
  CHECK(inbox[0].message.id == "m1");

  // Pending records can be acknowledged directly.
  CHECK(acknowledge(store, "u3", "m1").state == DeliveryState::Acknowledged);

  CHECK(error_of([&] { acknowledge(store, "u4", "m1"); }).code() == ErrorCode::NotFound);
  CHECK(error_of([&] { acknowledge(store, "u1", "m1"); }).code() == ErrorCode::NotFound);
  CHECK(error_of([&] { fetch_inbox(store, "ghost", std::nullopt, t0); }).code() ==
        ErrorCode::Validation);
  CHECK(fetch_inbox(store, "u4", std::nullopt, t0).empty());
  CHECK(fetch_inbox(store, "u2", ts("2017-06-10T09:00:01Z"), t0).empty());
  CHECK(fetch_inbox(store, "u2", ts("2017-06-10T09:00:00Z"), t0).size() == 1);
}
