// SPDX-License-Identifier: Apache-2.0
//
// Token embeddings backed by a `.vec` text file, with hashed character
// n-gram vectors for out-of-vocabulary tokens.

#ifndef LRPTEXT_EMBEDDING_H_
#define LRPTEXT_EMBEDDING_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrptext/tensor.h"

namespace lrptext {

struct SubwordOptions {
  int min_n = 3;
  int max_n = 6;
  std::uint32_t bucket_count = 50000;
  std::uint64_t seed = 0x5eed;
};

// 64-bit FNV-1a.
std::uint64_t Fnv1a64(std::string_view bytes);

// Character n-grams (UTF-8 code points) of "<token>" with lengths in
// [min_n, max_n], in order of start position then length.
std::vector<std::string> CharNgrams(std::string_view token, int min_n, int max_n);

class EmbeddingTable {
 public:
  // Table with no vocabulary: every token is composed from subword buckets.
  EmbeddingTable(int dim, SubwordOptions subwords = {});

  // Parses the `.vec` format: a "count dim" header line followed by one
  // "token v1 ... vd" line per entry. Duplicate tokens keep the last
  // occurrence and add a warning. Throws DataError with line numbers.
  static EmbeddingTable LoadVec(const std::filesystem::path &path,
                                SubwordOptions subwords = {});

  // Adds or replaces a vocabulary vector.
  void Set(const std::string &token, std::vector<Real> vector);

  // Stored vector for known tokens, otherwise the mean of the token's
  // n-gram bucket vectors. Never fails for non-empty tokens.
  Vector Embed(std::string_view token) const;

  bool Contains(std::string_view token) const;

  // Deterministic pseudo-random bucket vector, uniform in [-0.5/d, 0.5/d].
  // Generated on demand from (seed, bucket) rather than stored.
  Vector BucketVector(std::uint32_t bucket) const;
  std::uint32_t BucketOf(std::string_view ngram) const;

  int dim() const { return dim_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  const SubwordOptions &subwords() const { return subwords_; }
  const std::vector<std::string> &warnings() const { return warnings_; }

 private:
  int dim_;
  SubwordOptions subwords_;
  std::unordered_map<std::string, std::vector<Real>> vocab_;
  std::vector<std::string> warnings_;
};

// A T x d embedded document. Rows past the real token count are zero and
// masked out.
struct DocumentMatrix {
  Matrix values;
  Mask mask;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  int real_length() const { return CountUnmasked(mask); }
};

// Embeds the first min(|tokens|, max_len) tokens and zero-pads to max_len.
// Throws DataError for an empty token list.
DocumentMatrix EmbedDocument(const EmbeddingTable &table,
                             const std::vector<std::string> &tokens, int max_len);

}  // namespace lrptext

#endif  // LRPTEXT_EMBEDDING_H_
