#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fieldlog::csv {

struct Record {
  std::size_t line = 0;  // 1-based physical line where the record starts
  std::vector<std::string> fields;
  std::optional<std::string> error;  // malformed quoting
};

// RFC 4180 reader. Accepts LF or CRLF; a trailing newline does not produce an
// empty record.
class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  bool next(Record& record);

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

std::vector<Record> parse(std::string_view data);

// Quotes only when the field contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
void append_row(std::string& out, std::span<const std::string> fields);

}  // namespace fieldlog::csv
