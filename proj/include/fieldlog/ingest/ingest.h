#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fieldlog/classify/classify.h"
#include "fieldlog/core/json.h"
#include "fieldlog/core/store.h"
#include "fieldlog/core/types.h"
#include "fieldlog/ingest/transcription.h"

namespace fieldlog::ingest {

struct MessageSubmission {
  // Client-chosen message id; makes resubmission after a crash detectable
  // (Conflict). Server assigns one when absent.
  std::optional<std::string> id;
  std::string author_id;
  Timestamp recorded_at;
  std::optional<GeoPoint> gps;
  std::optional<std::string> beacon_id;
  std::optional<std::string> transcript;
  std::optional<std::string> audio_ref;

  friend bool operator==(const MessageSubmission&, const MessageSubmission&) = default;
};

// At least one of transcript/audio_ref is present (a blank transcript counts
// as absent); throws Error{Validation}.
void validate(const MessageSubmission& submission);

void to_json(Json& j, const MessageSubmission& v);
void from_json(const Json& j, MessageSubmission& v);

using IngestListener = std::function<void(const Message&, const std::vector<DeliveryRecord>&)>;

class MessageIngestor {
 public:
  static constexpr Duration kDefaultClockSkew{300};

  // `transcriber` may be null; audio-only submissions then fail with
  // TranscriptionFailed.
  MessageIngestor(Store& store, const classify::Lexicon& lexicon, Transcriber* transcriber,
                  Clock clock = system_now, Duration clock_skew = kDefaultClockSkew);

  // Transcribe if needed, resolve zone, rule-classify, then persist the message
  // and its delivery records in one transaction.
  Message ingest(const MessageSubmission& submission);

  void set_listener(IngestListener listener) { listener_ = std::move(listener); }

 private:
  Store& store_;
  const classify::Lexicon& lexicon_;
  Transcriber* transcriber_;
  Clock clock_;
  Duration clock_skew_;
  IngestListener listener_;
};

// JSON Lines of MessageSubmission objects. A line may also carry
// "units": [{subject?, importance?, type_code?}, ...] (manual labels; two or
// more entries split the message).
struct JsonlIngestReport {
  struct LineError {
    std::size_t line = 0;
    ErrorCode code = ErrorCode::Validation;
    std::string reason;
  };
  std::size_t ingested = 0;
  std::size_t already_present = 0;
  std::vector<std::string> message_ids;
  std::vector<LineError> errors;
};

JsonlIngestReport ingest_messages_jsonl(MessageIngestor& ingestor, Store& store,
                                        std::string_view jsonl);

void to_json(Json& j, const JsonlIngestReport& v);

}  // namespace fieldlog::ingest
