#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"

namespace fieldlog::routing {

// Every present filter must match (AND within a rule).
bool rule_matches(const SubscriptionRule& rule, const Message& message,
                  std::span<const std::string> transcript_tokens);

// Union over rules (OR across rules), author excluded.
std::set<std::string> match_subscribers(const Message& message,
                                        std::span<const SubscriptionRule> rules);

// Creates one Pending record per matched user inside the caller's transaction.
// Existing (message, user) records are kept as they are, so replays never
// duplicate. Returns the message's records after the call.
std::vector<DeliveryRecord> distribute(WriteSession& session, const Message& message);

struct InboxItem {
  Message message;
  DeliveryRecord delivery;
};

// Pending and Delivered records for the user, ordered by recorded_at then
// message id; returned records become Delivered with attempts incremented.
// `since` keeps messages recorded at or after it.
std::vector<InboxItem> fetch_inbox(Store& store, std::string_view user_id,
                                   std::optional<Timestamp> since, Timestamp now);

// Idempotent; a missing record is NotFound.
DeliveryRecord acknowledge(Store& store, std::string_view user_id, std::string_view message_id);

void to_json(Json& j, const InboxItem& v);

}  // namespace fieldlog::routing
