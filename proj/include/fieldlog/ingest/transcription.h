#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "fieldlog/core/error.h"

namespace fieldlog::ingest {

struct TranscriptionResult {
  std::string text;
  double confidence = 0.0;  // [0, 1]

  friend bool operator==(const TranscriptionResult&, const TranscriptionResult&) = default;
};

class TranscriptionError : public Error {
 public:
  enum class Reason { Timeout, Remote, Unmapped, Unavailable };

  TranscriptionError(Reason reason, std::string detail);
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

std::string_view to_string(TranscriptionError::Reason reason);

// Adapter boundary to a speech-recognition service.
class Transcriber {
 public:
  virtual ~Transcriber() = default;
  virtual TranscriptionResult transcribe(std::string_view audio_ref) = 0;
};

// Deterministic fixture-backed adapter.
class MockTranscriber final : public Transcriber {
 public:
  MockTranscriber() = default;
  explicit MockTranscriber(std::map<std::string, TranscriptionResult, std::less<>> fixtures);
  // JSON object: {"<uri>": {"text": "...", "confidence": 0.9}, ...}
  static MockTranscriber load(const std::filesystem::path& path);

  void add(std::string uri, TranscriptionResult result);
  TranscriptionResult transcribe(std::string_view audio_ref) override;

 private:
  std::map<std::string, TranscriptionResult, std::less<>> fixtures_;
};

// Client for an external service speaking
//   POST <path>  {"audio_ref": "<uri>"}  ->  200 {"text": "...", "confidence": x}
// Non-2xx responses surface the remote body verbatim.
struct HttpTranscriberConfig {
  std::string base_url;  // "http://host:port"
  std::string path = "/transcribe";
  std::chrono::milliseconds timeout{5000};
};

class HttpTranscriber final : public Transcriber {
 public:
  explicit HttpTranscriber(HttpTranscriberConfig config);
  TranscriptionResult transcribe(std::string_view audio_ref) override;

 private:
  HttpTranscriberConfig config_;
};

}  // namespace fieldlog::ingest
