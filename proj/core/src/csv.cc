// SPDX-License-Identifier: Apache-2.0

#include "lrptext/csv.h"

#include "lrptext/errors.h"

namespace lrptext {

std::optional<std::vector<std::string>> CsvReader::Next() {
  int ch = in_.get();
  // Skip blank lines between records.
  while (ch == '\n' || ch == '\r') {
    if (ch == '\n') ++line_;
    ch = in_.get();
  }
  if (ch == std::char_traits<char>::eof()) return std::nullopt;

  record_line_ = line_;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;

  for (;; ch = in_.get()) {
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) throw DataError("unterminated quoted field", record_line_);
      fields.push_back(std::move(field));
      return fields;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in_.peek() == '"') {
          in_.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line_;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field.empty() && !field_was_quoted) {
          quoted = true;
          field_was_quoted = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        break;
      case '\r':
        break;
      case '\n':
        ++line_;
        fields.push_back(std::move(field));
        return fields;
      default:
        field.push_back(c);
    }
  }
}

}  // namespace lrptext
