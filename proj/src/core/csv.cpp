#include "fieldlog/core/csv.h"

namespace fieldlog::csv {

bool Reader::next(Record& record) {
  record = Record{};
  if (pos_ >= data_.size()) return false;
  record.line = line_;
  std::string field;
  bool quoted = false;      // inside a quoted field
  bool was_quoted = false;  // current field started with a quote
  while (true) {
    if (pos_ >= data_.size()) {
      if (quoted && !record.error) record.error = "unterminated quoted field";
      record.fields.push_back(std::move(field));
      return true;
    }
    const char c = data_[pos_];
    if (quoted) {
      if (c == '"') {
        if (pos_ + 1 < data_.size() && data_[pos_ + 1] == '"') {
          field.push_back('"');
          pos_ += 2;
        } else {
          quoted = false;
          ++pos_;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
        ++pos_;
      }
      continue;
    }
    if (c == ',') {
      record.fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
      ++pos_;
    } else if (c == '\n' || c == '\r') {
      pos_ += (c == '\r' && pos_ + 1 < data_.size() && data_[pos_ + 1] == '\n') ? 2 : 1;
      ++line_;
      record.fields.push_back(std::move(field));
      return true;
    } else if (c == '"') {
      if (field.empty() && !was_quoted) {
        quoted = true;
        was_quoted = true;
      } else if (!record.error) {
        record.error = "unexpected quote in field";
      }
      ++pos_;
    } else {
      if (was_quoted && !record.error) record.error = "characters after closing quote";
      field.push_back(c);
      ++pos_;
    }
  }
}

std::vector<Record> parse(std::string_view data) {
  std::vector<Record> out;
  Reader reader(data);
  Record r;
  while (reader.next(r)) out.push_back(std::move(r));
  return out;
}

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void append_row(std::string& out, std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  out.push_back('\n');
}

}  // namespace fieldlog::csv
