// SPDX-License-Identifier: Apache-2.0
//
// Labeled text datasets: tokenization, loading, splitting and class
// distribution reports.

#ifndef LRPTEXT_CORPUS_H_
#define LRPTEXT_CORPUS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace lrptext {

// Lowercases ASCII letters, turns ASCII punctuation into separators and
// splits on whitespace. Bytes >= 0x80 are kept verbatim so UTF-8 words
// survive intact.
std::vector<std::string> Tokenize(std::string_view raw_text);

struct Document {
  std::string id;
  std::vector<std::string> tokens;
  int label = 0;
  std::string raw_text;
};

class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> names);

  // Returns the index of `name`, adding it at the end if unseen.
  int Intern(const std::string &name);
  // Throws DataError for unknown names.
  int IndexOf(const std::string &name) const;
  bool Contains(const std::string &name) const;
  const std::string &Name(int index) const { return names_.at(index); }
  const std::vector<std::string> &names() const { return names_; }
  int size() const { return static_cast<int>(names_.size()); }

  bool operator==(const LabelMap &other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, int> index_;
};

struct Dataset {
  std::vector<Document> documents;
  LabelMap label_map;
  // Non-fatal issues found while loading (e.g. rejected empty documents).
  std::vector<std::string> warnings;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

enum class DatasetFormat { kCsv, kJsonl };

// Parses "csv" / "jsonl"; throws ConfigError otherwise.
DatasetFormat ParseDatasetFormat(std::string_view name);
// Picks the format from the file extension (.csv or .jsonl/.json).
DatasetFormat DatasetFormatFromPath(const std::filesystem::path &path);

struct LoadOptions {
  DatasetFormat format = DatasetFormat::kJsonl;
  std::string text_field = "text";
  std::string label_field = "label";
  // Optional id column; when absent ids are "<file stem>:<line>".
  std::string id_field = "id";
  // When non-empty, labels are resolved against this map instead of being
  // collected in first-seen order. Unknown labels are errors.
  const LabelMap *fixed_labels = nullptr;
};

// One Document per record. Records whose text tokenizes to nothing are
// dropped with a warning. Throws ConfigError for unknown field names and
// DataError (with line number) for malformed records or an empty result.
Dataset LoadDataset(const std::filesystem::path &path, const LoadOptions &options);

// Deterministic shuffle under `seed`; the first half gets ceil(n * fraction)
// documents. Both halves share the input's LabelMap.
std::pair<Dataset, Dataset> SplitDataset(const Dataset &dataset,
                                         double train_fraction,
                                         std::uint64_t seed);

// Count per class index; classes without documents report 0.
std::vector<std::size_t> ClassDistribution(const Dataset &dataset);

// Tab-separated "class\tcount\tfraction" rows with a header line.
std::string DistributionTsv(const Dataset &dataset);
// Fixed-width table with a text bar per class, for terminals.
std::string DistributionTable(const Dataset &dataset);

}  // namespace lrptext

#endif  // LRPTEXT_CORPUS_H_
