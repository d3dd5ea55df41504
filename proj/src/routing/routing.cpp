#include "fieldlog/routing/routing.h"

#include <algorithm>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"

namespace fieldlog::routing {

bool rule_matches(const SubscriptionRule& rule, const Message& message,
                  std::span<const std::string> transcript_tokens) {
  if (rule.subject_filter) {
    const auto& subjects = *rule.subject_filter;
    const bool hit = std::any_of(message.classification_units.begin(),
                                 message.classification_units.end(),
                                 [&](const ClassificationUnit& u) { return subjects.contains(u.subject); });
    if (!hit) return false;
  }
  if (rule.zone_filter) {
    if (!message.zone_id || !rule.zone_filter->contains(*message.zone_id)) return false;
  }
  if (rule.keyword_filter) {
    const bool hit = std::any_of(rule.keyword_filter->begin(), rule.keyword_filter->end(),
                                 [&](const std::string& k) { return text::has_keyword(transcript_tokens, k); });
    if (!hit) return false;
  }
  if (rule.min_importance) {
    const int level = importance_rank(max_importance(message));
    if (level == 0 || level < importance_rank(*rule.min_importance)) return false;
  }
  return true;
}

std::set<std::string> match_subscribers(const Message& message,
                                        std::span<const SubscriptionRule> rules) {
  const auto tokens = text::tokenize(message.transcript);
  std::set<std::string> users;
  for (const auto& rule : rules) {
    if (rule.user_id == message.author_id) continue;
    if (rule_matches(rule, message, tokens)) users.insert(rule.user_id);
  }
  return users;
}

std::vector<DeliveryRecord> distribute(WriteSession& session, const Message& message) {
  const auto rules = session.list_rules();
  std::vector<DeliveryRecord> pending;
  for (const auto& user : match_subscribers(message, rules)) {
    pending.push_back(DeliveryRecord{message.id, user, DeliveryState::Pending, 0, std::nullopt});
  }
  session.insert_deliveries(pending);
  return session.list_deliveries(std::nullopt, message.id);
}

std::vector<InboxItem> fetch_inbox(Store& store, std::string_view user_id,
                                   std::optional<Timestamp> since, Timestamp now) {
  return store.write([&](WriteSession& s) {
    if (!s.get_user(user_id)) fail_validation("unknown user '" + std::string(user_id) + "'", "user");
    std::vector<InboxItem> items;
    for (auto& d : s.list_deliveries(user_id)) {
      if (d.state == DeliveryState::Acknowledged) continue;
      auto message = s.get_message(d.message_id);
      if (!message) continue;
      if (since && message->recorded_at < *since) continue;
      items.push_back({std::move(*message), std::move(d)});
    }
    std::sort(items.begin(), items.end(), [](const InboxItem& a, const InboxItem& b) {
      return a.message.recorded_at != b.message.recorded_at
                 ? a.message.recorded_at < b.message.recorded_at
                 : a.message.id < b.message.id;
    });
    for (auto& item : items) {
      item.delivery.state = DeliveryState::Delivered;
      ++item.delivery.attempts;
      item.delivery.last_attempt_at = now;
      s.update_delivery(item.delivery);
    }
    return items;
  });
}

DeliveryRecord acknowledge(Store& store, std::string_view user_id, std::string_view message_id) {
  return store.write([&](WriteSession& s) {
    auto record = s.get_delivery(message_id, user_id);
    if (!record) {
      fail_not_found("no delivery of '" + std::string(message_id) + "' to '" + std::string(user_id) +
                     "'");
    }
    if (record->state != DeliveryState::Acknowledged) {
      record->state = DeliveryState::Acknowledged;
      s.update_delivery(*record);
    }
    return *record;
  });
}

void to_json(Json& j, const InboxItem& v) { j = Json{{"message", v.message}, {"delivery", v.delivery}}; }

}  // namespace fieldlog::routing
