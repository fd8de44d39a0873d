// SPDX-License-Identifier: Apache-2.0

#include "lrptext/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lrptext/csv.h"
#include "lrptext/errors.h"
#include "lrptext/random.h"

namespace lrptext {

namespace {

bool IsSeparator(unsigned char c) {
  if (c >= 0x80) return false;
  return std::isspace(c) || std::ispunct(c);
}

// Label values may be strings or numbers in JSON.
std::string LabelToString(const nlohmann::json &value, std::size_t line) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  throw DataError("label must be a string or integer", line);
}

class DatasetBuilder {
 public:
  DatasetBuilder(const std::filesystem::path &path, const LoadOptions &options)
      : stem_(path.stem().string()), options_(options) {
    if (options.fixed_labels != nullptr) dataset_.label_map = *options.fixed_labels;
  }

  void Add(std::string id, std::string text, const std::string &label,
           std::size_t line) {
    if (id.empty()) id = stem_ + ":" + std::to_string(line);
    if (!ids_.insert(id).second) {
      throw DataError("duplicate document id '" + id + "'", line);
    }
    Document doc;
    doc.id = std::move(id);
    doc.tokens = Tokenize(text);
    doc.raw_text = std::move(text);
    if (doc.tokens.empty()) {
      std::string warning = "line " + std::to_string(line) + ": document '" +
                            doc.id + "' has no tokens; skipped";
      spdlog::warn("{}", warning);
      dataset_.warnings.push_back(std::move(warning));
      return;
    }
    if (options_.fixed_labels != nullptr) {
      if (!dataset_.label_map.Contains(label)) {
        throw DataError("unknown label '" + label + "'", line);
      }
      doc.label = dataset_.label_map.IndexOf(label);
    } else {
      doc.label = dataset_.label_map.Intern(label);
    }
    dataset_.documents.push_back(std::move(doc));
  }

  Dataset Finish() {
    if (dataset_.documents.empty()) throw DataError("empty dataset");
    return std::move(dataset_);
  }

 private:
  std::string stem_;
  const LoadOptions &options_;
  Dataset dataset_;
  std::set<std::string> ids_;
};

Dataset LoadCsv(std::istream &in, const std::filesystem::path &path,
                const LoadOptions &options) {
  CsvReader reader(in);
  auto header = reader.Next();
  if (!header) throw DataError("empty dataset");
  auto column = [&](const std::string &name) -> int {
    auto it = std::find(header->begin(), header->end(), name);
    return it == header->end() ? -1 : static_cast<int>(it - header->begin());
  };
  const int text_col = column(options.text_field);
  const int label_col = column(options.label_field);
  const int id_col = column(options.id_field);
  if (text_col < 0) {
    throw ConfigError("text field '" + options.text_field + "' not in CSV header");
  }
  if (label_col < 0) {
    throw ConfigError("label field '" + options.label_field + "' not in CSV header");
  }

  DatasetBuilder builder(path, options);
  while (auto record = reader.Next()) {
    const std::size_t line = reader.record_line();
    if (record->size() != header->size()) {
      throw DataError("expected " + std::to_string(header->size()) +
                          " fields, found " + std::to_string(record->size()),
                      line);
    }
    std::string id = id_col >= 0 ? (*record)[id_col] : std::string();
    builder.Add(std::move(id), std::move((*record)[text_col]),
                (*record)[label_col], line);
  }
  return builder.Finish();
}

Dataset LoadJsonl(std::istream &in, const std::filesystem::path &path,
                  const LoadOptions &options) {
  DatasetBuilder builder(path, options);
  std::string text;
  std::size_t line = 0;
  bool first_record = true;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error &e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!record.is_object()) throw DataError("record is not a JSON object", line);

    for (const auto *field : {&options.text_field, &options.label_field}) {
      if (!record.contains(*field)) {
        // A field absent from the very first record is a naming problem, not
        // a data problem.
        if (first_record) {
          throw ConfigError("field '" + *field + "' not present in records of " +
                            path.string());
        }
        throw DataError("missing field '" + *field + "'", line);
      }
    }
    first_record = false;
    const auto &text_value = record[options.text_field];
    if (!text_value.is_string()) throw DataError("text field is not a string", line);
    std::string id;
    if (auto it = record.find(options.id_field); it != record.end()) {
      id = it->is_string() ? it->get<std::string>() : it->dump();
    }
    builder.Add(std::move(id), text_value.get<std::string>(),
                LabelToString(record[options.label_field], line), line);
  }
  return builder.Finish();
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view raw_text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : raw_text) {
    const auto c = static_cast<unsigned char>(ch);
    if (IsSeparator(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

LabelMap::LabelMap(std::vector<std::string> names) {
  for (auto &name : names) {
    if (Contains(name)) throw DataError("duplicate class name '" + name + "'");
    Intern(name);
  }
}

int LabelMap::Intern(const std::string &name) {
  auto [it, inserted] = index_.emplace(name, size());
  if (inserted) names_.push_back(name);
  return it->second;
}

int LabelMap::IndexOf(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("unknown class '" + name + "'");
  return it->second;
}

bool LabelMap::Contains(const std::string &name) const {
  return index_.count(name) != 0;
}

DatasetFormat ParseDatasetFormat(std::string_view name) {
  if (name == "csv") return DatasetFormat::kCsv;
  if (name == "jsonl") return DatasetFormat::kJsonl;
  throw ConfigError("unknown dataset format '" + std::string(name) +
                    "' (expected csv or jsonl)");
}

DatasetFormat DatasetFormatFromPath(const std::filesystem::path &path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DatasetFormat::kCsv;
  if (ext == ".jsonl" || ext == ".json") return DatasetFormat::kJsonl;
  throw ConfigError("cannot infer dataset format from '" + path.string() + "'");
}

Dataset LoadDataset(const std::filesystem::path &path, const LoadOptions &options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  Dataset dataset = options.format == DatasetFormat::kCsv
                        ? LoadCsv(in, path, options)
                        : LoadJsonl(in, path, options);
  if (options.fixed_labels == nullptr && dataset.label_map.size() < 2) {
    spdlog::warn("{}: only {} distinct label(s)", path.string(),
                 dataset.label_map.size());
  }
  return dataset;
}

std::pair<Dataset, Dataset> SplitDataset(const Dataset &dataset,
                                         double train_fraction,
                                         std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  if (dataset.size() < 2) throw DataError("need at least 2 documents to split");

  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.Shuffle(order);

  const auto n = static_cast<double>(dataset.size());
  // Guard against 0.8 * 10 = 8.000000000000002 style rounding.
  auto first = static_cast<std::size_t>(std::ceil(n * train_fraction - 1e-9));
  first = std::clamp<std::size_t>(first, 1, dataset.size() - 1);

  std::pair<Dataset, Dataset> halves;
  halves.first.label_map = dataset.label_map;
  halves.second.label_map = dataset.label_map;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto &target = i < first ? halves.first : halves.second;
    target.documents.push_back(dataset.documents[order[i]]);
  }
  return halves;
}

std::vector<std::size_t> ClassDistribution(const Dataset &dataset) {
  std::vector<std::size_t> counts(dataset.label_map.size(), 0);
  for (const auto &doc : dataset.documents) counts.at(doc.label)++;
  return counts;
}

std::string DistributionTsv(const Dataset &dataset) {
  const auto counts = ClassDistribution(dataset);
  std::ostringstream out;
  out << "class\tcount\tfraction\n";
  out << std::fixed << std::setprecision(4);
  for (int k = 0; k < dataset.label_map.size(); ++k) {
    const double fraction =
        dataset.empty() ? 0.0 : static_cast<double>(counts[k]) / dataset.size();
    out << dataset.label_map.Name(k) << '\t' << counts[k] << '\t' << fraction << '\n';
  }
  return out.str();
}

std::string DistributionTable(const Dataset &dataset) {
  const auto counts = ClassDistribution(dataset);
  std::size_t name_width = 5;
  std::size_t max_count = 1;
  for (int k = 0; k < dataset.label_map.size(); ++k) {
    name_width = std::max(name_width, dataset.label_map.Name(k).size());
    max_count = std::max(max_count, counts[k]);
  }
  constexpr std::size_t kBarWidth = 40;
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "class"
      << "  " << std::right << std::setw(8) << "count" << '\n';
  for (int k = 0; k < dataset.label_map.size(); ++k) {
    const std::size_t bar = counts[k] * kBarWidth / max_count;
    out << std::left << std::setw(static_cast<int>(name_width))
        << dataset.label_map.Name(k) << "  " << std::right << std::setw(8)
        << counts[k] << "  " << std::string(bar, '#') << '\n';
  }
  out << std::left << std::setw(static_cast<int>(name_width)) << "total"
      << "  " << std::right << std::setw(8) << dataset.size() << '\n';
  return out.str();
}

}  // namespace lrptext
