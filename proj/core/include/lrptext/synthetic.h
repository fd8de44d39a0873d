// SPDX-License-Identifier: Apache-2.0
//
// Synthetic keyword corpus: every class owns a small keyword set and each
// document mixes a few of its class's keywords into shared filler words, so
// the keywords alone determine the label.

#ifndef LRPTEXT_SYNTHETIC_H_
#define LRPTEXT_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lrptext/corpus.h"
#include "lrptext/embedding.h"

namespace lrptext {

struct SyntheticOptions {
  int num_classes = 9;
  int num_documents = 200;
  int tokens_per_document = 20;
  int keywords_per_class = 4;
  int keywords_per_document = 4;
  int filler_vocabulary = 20;
  int embedding_dim = 16;
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  Dataset dataset;
  // keywords[k] is the planted set of class k.
  std::vector<std::vector<std::string>> keywords;
  std::vector<std::string> fillers;
  // Vocabulary vectors for every keyword and filler word.
  EmbeddingTable embeddings;

  bool IsKeywordOf(const std::string &token, int label) const;
  bool IsKeyword(const std::string &token) const;
};

// Documents are assigned classes round-robin, so classes are balanced.
SyntheticCorpus MakeSyntheticCorpus(const SyntheticOptions &options);

// One {"id", "text", "label"} object per line.
void WriteJsonl(const Dataset &dataset, const std::filesystem::path &path);
// `.vec` text format for the vocabulary of `corpus`.
void WriteVec(const SyntheticCorpus &corpus, const std::filesystem::path &path);

}  // namespace lrptext

#endif  // LRPTEXT_SYNTHETIC_H_
