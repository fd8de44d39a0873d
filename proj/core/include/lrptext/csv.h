// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_CSV_H_
#define LRPTEXT_CSV_H_

#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace lrptext {

// Minimal RFC 4180 reader: comma separated, double-quoted fields may contain
// commas, quotes ("") and newlines. Tracks the physical line on which each
// record starts.
class CsvReader {
 public:
  explicit CsvReader(std::istream &in) : in_(in) {}

  // Next record, or nullopt at end of input. Throws DataError on an
  // unterminated quoted field.
  std::optional<std::vector<std::string>> Next();

  // 1-based line where the most recently returned record started.
  std::size_t record_line() const { return record_line_; }

 private:
  std::istream &in_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
};

}  // namespace lrptext

#endif  // LRPTEXT_CSV_H_
