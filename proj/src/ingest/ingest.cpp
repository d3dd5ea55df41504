#include "fieldlog/ingest/ingest.h"

#include <algorithm>
#include <cmath>

#include "fieldlog/core/error.h"
#include "fieldlog/core/text.h"
#include "fieldlog/ingest/geofence.h"
#include "fieldlog/routing/routing.h"

namespace fieldlog::ingest {

void validate(const MessageSubmission& s) {
  if (s.id && text::is_blank(*s.id)) fail_validation("id must be non-empty when present", "id");
  if (text::is_blank(s.author_id)) fail_validation("author_id is required", "author_id");
  const bool has_text = s.transcript && !text::is_blank(*s.transcript);
  const bool has_audio = s.audio_ref && !text::is_blank(*s.audio_ref);
  if (!has_text && !has_audio) {
    fail_validation("a transcript or an audio_ref is required", "transcript");
  }
  if (s.gps && (!std::isfinite(s.gps->lat) || !std::isfinite(s.gps->lon) ||
                std::abs(s.gps->lat) > 90.0 || std::abs(s.gps->lon) > 180.0)) {
    fail_validation("gps point outside WGS84 range", "gps");
  }
}

void to_json(Json& j, const MessageSubmission& v) {
  j = Json::object();
  if (v.id) j["id"] = *v.id;
  j["author_id"] = v.author_id;
  j["recorded_at"] = v.recorded_at;
  if (v.gps) j["gps"] = *v.gps;
  if (v.beacon_id) j["beacon_id"] = *v.beacon_id;
  if (v.transcript) j["transcript"] = *v.transcript;
  if (v.audio_ref) j["audio_ref"] = *v.audio_ref;
}

void from_json(const Json& j, MessageSubmission& v) {
  using namespace json_field;
  if (!j.is_object()) fail_validation("expected an object");
  v = {};
  if (const auto* x = optional(j, "id")) v.id = as_string(*x, "id");
  v.author_id = as_string(required(j, "author_id", ""), "author_id");
  v.recorded_at = as_timestamp(required(j, "recorded_at", ""), "recorded_at");
  if (const auto* x = optional(j, "gps")) v.gps = as_point(*x, "gps");
  if (const auto* x = optional(j, "beacon_id")) v.beacon_id = as_string(*x, "beacon_id");
  if (const auto* x = optional(j, "transcript")) v.transcript = as_string(*x, "transcript");
  if (const auto* x = optional(j, "audio_ref")) v.audio_ref = as_string(*x, "audio_ref");
}

MessageIngestor::MessageIngestor(Store& store, const classify::Lexicon& lexicon,
                                 Transcriber* transcriber, Clock clock, Duration clock_skew)
    : store_(store),
      lexicon_(lexicon),
      transcriber_(transcriber),
      clock_(std::move(clock)),
      clock_skew_(clock_skew) {}

Message MessageIngestor::ingest(const MessageSubmission& sub) {
  validate(sub);
  const Timestamp now = clock_();
  if (sub.recorded_at > now + clock_skew_) {
    fail_validation("recorded_at is more than " + std::to_string(clock_skew_.count()) +
                        " s ahead of server time",
                    "recorded_at");
  }
  if (!store_.get_user(sub.author_id)) {
    fail_validation("unknown author '" + sub.author_id + "'", "author_id");
  }

  Message m;
  m.author_id = sub.author_id;
  m.recorded_at = sub.recorded_at;
  m.raw_location = RawLocation{sub.gps, sub.beacon_id};
  m.audio_ref = sub.audio_ref;
  if (sub.transcript && !text::is_blank(*sub.transcript)) {
    m.transcript = *sub.transcript;
  } else {
    if (transcriber_ == nullptr) {
      throw TranscriptionError(TranscriptionError::Reason::Unavailable,
                               "no transcription adapter configured");
    }
    auto result = transcriber_->transcribe(*sub.audio_ref);
    if (text::is_blank(result.text)) {
      throw TranscriptionError(TranscriptionError::Reason::Remote, "empty transcript");
    }
    m.transcript = std::move(result.text);
    m.transcription_confidence = result.confidence;
  }
  m.classification_units = {classify::classify(m.transcript, lexicon_)};
  m.created_at = std::max(now, sub.recorded_at);

  std::vector<DeliveryRecord> records;
  store_.write([&](WriteSession& s) {
    const ZoneRegistry zones(s.list_zones());
    const auto where = zones.resolve(sub.gps, sub.beacon_id);
    m.zone_id = where.zone_id;
    if (where.unknown_beacon) {
      m.warnings.push_back("UnknownBeacon: '" + *sub.beacon_id + "' is not registered");
    }
    m.id = sub.id ? *sub.id : s.next_message_id();
    s.insert_message(m);
    records = routing::distribute(s, m);
  });
  if (listener_) listener_(m, records);
  return m;
}

JsonlIngestReport ingest_messages_jsonl(MessageIngestor& ingestor, Store& store,
                                        std::string_view jsonl) {
  JsonlIngestReport report;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = text::trim(jsonl.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto doc = parse_json(line);
      const auto sub = doc.get<MessageSubmission>();
      std::vector<classify::LabelPatch> units;
      if (const auto* u = json_field::optional(doc, "units")) {
        if (!u->is_array() || u->empty()) fail_validation("expected a non-empty array", "units");
        for (std::size_t i = 0; i < u->size(); ++i) {
          units.push_back(classify::decode_label_patch((*u)[i], "units[" + std::to_string(i) + "]"));
        }
      }
      std::string id;
      try {
        id = ingestor.ingest(sub).id;
        ++report.ingested;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Conflict || !sub.id) throw;
        id = *sub.id;
        ++report.already_present;
      }
      if (!units.empty()) {
        store.write([&](WriteSession& s) {
          const auto existing = s.get_message(id);
          const bool done = existing && std::all_of(existing->classification_units.begin(),
                                                     existing->classification_units.end(),
                                                     [](const ClassificationUnit& c) {
                                                       return c.source == LabelSource::Manual;
                                                     });
          if (done || (units.size() == 1 && units.front().empty())) return;
          classify::Annotation a;
          if (units.size() == 1) a.labels = units.front();
          else a.split = units;
          classify::annotate(s, id, a);
        });
      }
      report.message_ids.push_back(id);
    } catch (const Error& e) {
      report.errors.push_back({line_no, e.code(),
                               e.field_path().empty() ? e.what()
                                                      : e.field_path() + ": " + e.what()});
    }
  }
  return report;
}

void to_json(Json& j, const JsonlIngestReport& v) {
  Json errors = Json::array();
  for (const auto& e : v.errors) {
    errors.push_back({{"line", e.line}, {"code", to_string(e.code)}, {"reason", e.reason}});
  }
  j = Json{{"ingested", v.ingested},
           {"already_present", v.already_present},
           {"message_ids", v.message_ids},
           {"errors", errors}};
}

}  // namespace fieldlog::ingest
