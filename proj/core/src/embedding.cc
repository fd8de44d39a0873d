// SPDX-License-Identifier: Apache-2.0

#include "lrptext/embedding.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lrptext/errors.h"
#include "lrptext/random.h"

namespace lrptext {

namespace {

bool IsContinuationByte(char c) {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

std::vector<std::string_view> SplitSpaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) parts.push_back(line.substr(i, j - i));
    i = j;
  }
  return parts;
}

Real ParseReal(std::string_view text, std::size_t line) {
  // std::from_chars for double is available in libstdc++ 11.
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError("invalid number '" + std::string(text) + "'", line);
  }
  return value;
}

long ParseCount(std::string_view text, std::size_t line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    throw DataError("invalid header field '" + std::string(text) + "'", line);
  }
  return value;
}

}  // namespace

std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::vector<std::string> CharNgrams(std::string_view token, int min_n, int max_n) {
  const std::string word = "<" + std::string(token) + ">";
  std::vector<std::string> ngrams;
  for (std::size_t start = 0; start < word.size(); ++start) {
    if (IsContinuationByte(word[start])) continue;
    std::size_t end = start;
    for (int n = 1; n <= max_n && end < word.size(); ++n) {
      // Advance one code point.
      ++end;
      while (end < word.size() && IsContinuationByte(word[end])) ++end;
      if (n >= min_n) ngrams.push_back(word.substr(start, end - start));
    }
  }
  return ngrams;
}

EmbeddingTable::EmbeddingTable(int dim, SubwordOptions subwords)
    : dim_(dim), subwords_(subwords) {
  if (dim <= 0) throw ConfigError("embedding dimension must be positive");
  if (subwords.bucket_count < 1) throw ConfigError("bucket count must be >= 1");
  if (subwords.min_n < 1 || subwords.max_n < subwords.min_n) {
    throw ConfigError("invalid n-gram range");
  }
}

EmbeddingTable EmbeddingTable::LoadVec(const std::filesystem::path &path,
                                       SubwordOptions subwords) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embedding file", 1);
  auto header = SplitSpaces(line);
  if (header.size() != 2) throw DataError("expected header 'count dim'", 1);
  const long count = ParseCount(header[0], 1);
  const long dim = ParseCount(header[1], 1);
  if (dim <= 0) throw DataError("dimension must be positive", 1);

  EmbeddingTable table(static_cast<int>(dim), subwords);
  std::size_t line_no = 1;
  long entries = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto parts = SplitSpaces(line);
    if (parts.empty()) continue;
    if (static_cast<long>(parts.size()) != dim + 1) {
      throw DataError("expected " + std::to_string(dim) + " values, found " +
                          std::to_string(parts.size() - 1),
                      line_no);
    }
    std::vector<Real> values(dim);
    for (long k = 0; k < dim; ++k) values[k] = ParseReal(parts[k + 1], line_no);
    std::string token(parts[0]);
    if (table.Contains(token)) {
      std::string warning = "line " + std::to_string(line_no) +
                            ": duplicate token '" + token + "', keeping last";
      spdlog::warn("{}: {}", path.string(), warning);
      table.warnings_.push_back(std::move(warning));
    }
    table.vocab_[std::move(token)] = std::move(values);
    ++entries;
  }
  if (entries != count) {
    throw DataError("header declares " + std::to_string(count) +
                    " vectors but file has " + std::to_string(entries));
  }
  return table;
}

void EmbeddingTable::Set(const std::string &token, std::vector<Real> vector) {
  if (static_cast<int>(vector.size()) != dim_) {
    throw ShapeError("embedding vector length " + std::to_string(vector.size()) +
                     " != " + std::to_string(dim_));
  }
  vocab_[token] = std::move(vector);
}

bool EmbeddingTable::Contains(std::string_view token) const {
  return vocab_.find(std::string(token)) != vocab_.end();
}

std::uint32_t EmbeddingTable::BucketOf(std::string_view ngram) const {
  return static_cast<std::uint32_t>(Fnv1a64(ngram) % subwords_.bucket_count);
}

Vector EmbeddingTable::BucketVector(std::uint32_t bucket) const {
  Vector v(dim_);
  const double half_width = 0.5 / dim_;
  std::uint64_t state = Mix64(subwords_.seed ^ (0xa24baed4963ee407ULL * (bucket + 1ULL)));
  for (int k = 0; k < dim_; ++k) {
    state = Mix64(state);
    const double unit = static_cast<double>(state >> 11) * 0x1.0p-53;
    v[k] = -half_width + 2.0 * half_width * unit;
  }
  return v;
}

Vector EmbeddingTable::Embed(std::string_view token) const {
  if (auto it = vocab_.find(std::string(token)); it != vocab_.end()) {
    return ConstVectorMap(it->second.data(), dim_);
  }
  Vector sum = Vector::Zero(dim_);
  const auto ngrams = CharNgrams(token, subwords_.min_n, subwords_.max_n);
  for (const auto &ngram : ngrams) sum += BucketVector(BucketOf(ngram));
  if (!ngrams.empty()) sum /= static_cast<Real>(ngrams.size());
  return sum;
}

DocumentMatrix EmbedDocument(const EmbeddingTable &table,
                             const std::vector<std::string> &tokens, int max_len) {
  if (tokens.empty()) throw DataError("cannot embed an empty document");
  if (max_len <= 0) throw ConfigError("max_len must be positive");
  DocumentMatrix doc;
  doc.values = Matrix::Zero(max_len, table.dim());
  doc.mask.assign(max_len, 0);
  const int n = std::min<int>(static_cast<int>(tokens.size()), max_len);
  for (int t = 0; t < n; ++t) {
    doc.values.row(t) = table.Embed(tokens[t]).transpose();
    doc.mask[t] = 1;
  }
  return doc;
}

}  // namespace lrptext
