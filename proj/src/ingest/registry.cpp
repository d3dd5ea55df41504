#include "fieldlog/ingest/registry.h"

#include <string>

#include "fieldlog/core/error.h"

namespace fieldlog::ingest {

namespace {

template <typename T>
std::vector<T> list(const Json& j, const char* key) {
  std::vector<T> out;
  const auto* arr = json_field::optional(j, key);
  if (!arr) return out;
  if (!arr->is_array()) fail_validation("expected an array", key);
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const auto path = std::string(key) + "[" + std::to_string(i) + "]";
    auto item = json_field::decode<T>((*arr)[i], path);
    try {
      validate(item);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), e.field_path().empty() ? path : path + "." + e.field_path());
    }
    out.push_back(std::move(item));
  }
  return out;
}

}  // namespace

Registry parse_registry(const Json& j) {
  if (!j.is_object()) fail_validation("registry must be a JSON object");
  Registry r;
  r.users = list<User>(j, "users");
  r.zones = list<Zone>(j, "zones");
  r.streams = list<SensorStream>(j, "streams");
  r.subscriptions = list<SubscriptionRule>(j, "subscriptions");
  return r;
}

void to_json(Json& j, const Registry& v) {
  j = Json{{"users", v.users},
           {"zones", v.zones},
           {"streams", v.streams},
           {"subscriptions", v.subscriptions}};
}

void apply_registry(Store& store, const Registry& registry) {
  store.write([&](WriteSession& s) {
    for (const auto& u : registry.users) s.put_user(u);
    for (const auto& z : registry.zones) s.put_zone(z);
    for (const auto& st : registry.streams) s.put_stream(st);
    for (const auto& r : registry.subscriptions) s.put_rule(r);
  });
}

}  // namespace fieldlog::ingest
