#include "fieldlog/ingest/transcription.h"

#include <httplib.h>

#include <fstream>
#include <sstream>

#include "fieldlog/core/json.h"

namespace fieldlog::ingest {

std::string_view to_string(TranscriptionError::Reason reason) {
  switch (reason) {
    case TranscriptionError::Reason::Timeout: return "timeout";
    case TranscriptionError::Reason::Remote: return "remote";
    case TranscriptionError::Reason::Unmapped: return "unmapped";
    case TranscriptionError::Reason::Unavailable: return "unavailable";
  }
  return "remote";
}

TranscriptionError::TranscriptionError(Reason reason, std::string detail)
    : Error(ErrorCode::TranscriptionFailed, std::string(to_string(reason)) + ": " + detail),
      reason_(reason) {}

MockTranscriber::MockTranscriber(std::map<std::string, TranscriptionResult, std::less<>> fixtures)
    : fixtures_(std::move(fixtures)) {}

MockTranscriber MockTranscriber::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_validation("cannot read transcription fixtures " + path.string(), "mock_fixtures");
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto doc = parse_json(buf.str());
  if (!doc.is_object()) fail_validation("fixtures must be a JSON object", "mock_fixtures");
  MockTranscriber mock;
  for (const auto& [uri, entry] : doc.items()) {
    const std::string path_prefix = "mock_fixtures." + uri;
    TranscriptionResult r;
    r.text = json_field::as_string(json_field::required(entry, "text", path_prefix), path_prefix + ".text");
    r.confidence = json_field::as_number(json_field::required(entry, "confidence", path_prefix),
                                         path_prefix + ".confidence");
    mock.add(uri, std::move(r));
  }
  return mock;
}

void MockTranscriber::add(std::string uri, TranscriptionResult result) {
  if (!(result.confidence >= 0.0 && result.confidence <= 1.0)) {
    fail_validation("confidence must lie in [0,1]", "confidence");
  }
  fixtures_.insert_or_assign(std::move(uri), std::move(result));
}

TranscriptionResult MockTranscriber::transcribe(std::string_view audio_ref) {
  const auto it = fixtures_.find(audio_ref);
  if (it == fixtures_.end()) {
    throw TranscriptionError(TranscriptionError::Reason::Unmapped,
                             "no fixture for '" + std::string(audio_ref) + "'");
  }
  return it->second;
}

HttpTranscriber::HttpTranscriber(HttpTranscriberConfig config) : config_(std::move(config)) {}

TranscriptionResult HttpTranscriber::transcribe(std::string_view audio_ref) {
  using Reason = TranscriptionError::Reason;
  httplib::Client client(config_.base_url);
  const auto sec = static_cast<time_t>(config_.timeout.count() / 1000);
  const auto usec = static_cast<time_t>(config_.timeout.count() % 1000 * 1000);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);

  const auto started = std::chrono::steady_clock::now();
  const Json body{{"audio_ref", audio_ref}};
  auto res = client.Post(config_.path, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= config_.timeout)) {
      throw TranscriptionError(Reason::Timeout, "no response from " + config_.base_url + " within " +
                                                    std::to_string(config_.timeout.count()) + " ms");
    }
    throw TranscriptionError(Reason::Unavailable, config_.base_url + ": " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TranscriptionError(Reason::Remote, res->body);
  }
  try {
    const auto doc = Json::parse(res->body);
    TranscriptionResult out;
    out.text = json_field::as_string(json_field::required(doc, "text", ""), "text");
    out.confidence = json_field::as_number(json_field::required(doc, "confidence", ""), "confidence");
    if (out.confidence < 0.0 || out.confidence > 1.0) {
      throw TranscriptionError(Reason::Remote, "confidence outside [0,1]: " + res->body);
    }
    return out;
  } catch (const TranscriptionError&) {
    throw;
  } catch (const std::exception&) {
    throw TranscriptionError(Reason::Remote, "unparseable response: " + res->body);
  }
}

}  // namespace fieldlog::ingest
