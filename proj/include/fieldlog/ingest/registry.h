#pragma once

#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"

namespace fieldlog::ingest {

// Farm setup bundle: {"users": [...], "zones": [...], "streams": [...],
// "subscriptions": [...]}. Every key is optional.
struct Registry {
  std::vector<User> users;
  std::vector<Zone> zones;
  std::vector<SensorStream> streams;
  std::vector<SubscriptionRule> subscriptions;
};

Registry parse_registry(const Json& j);
void to_json(Json& j, const Registry& v);

// Upserts everything in one transaction, in dependency order.
void apply_registry(Store& store, const Registry& registry);

}  // namespace fieldlog::ingest
