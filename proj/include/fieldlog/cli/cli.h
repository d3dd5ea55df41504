#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "fieldlog/core/error.h"

namespace fieldlog::cli {

// Exclusive advisory lock on <data-dir>/fieldlog.lock, held by the server and
// by every writing command. Contention throws Error{Conflict}.
class DataDirLock {
 public:
  static constexpr const char* kLockFile = "fieldlog.lock";

  explicit DataDirLock(const std::filesystem::path& data_dir);
  ~DataDirLock();
  DataDirLock(const DataDirLock&) = delete;
  DataDirLock& operator=(const DataDirLock&) = delete;

 private:
  int fd_ = -1;
};

// One machine-parseable line: error code=<Code> field=<path> message="<text>"
std::string format_error(const Error& e);

// Process exit status per error code (Validation 2, NotFound 3, Conflict 4,
// TranscriptionFailed 5, NoZone 6, Internal 1).
int exit_status(ErrorCode code);

// Entry point shared by the executable and the tests. `serve` blocks until
// SIGINT or SIGTERM.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fieldlog::cli
