// SPDX-License-Identifier: Apache-2.0

#include "lrptext/synthetic.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "lrptext/errors.h"
#include "lrptext/random.h"

namespace lrptext {

namespace {

const char *const kClassNames[] = {
    "human_necessities", "performing_operations", "chemistry",
    "textiles",          "fixed_constructions",   "mechanical_engineering",
    "physics",           "electricity",           "general"};

const char *const kClassKeywords[][4] = {
    {"dietary", "garment", "surgical", "infant"},
    {"conveyor", "printing", "welding", "vehicle"},
    {"alkali", "alkyl", "monomer", "acid"},
    {"yarn", "fibre", "weaving", "paperboard"},
    {"bridge", "masonry", "drainage", "lock"},
    {"piston", "turbine", "burner", "valve"},
    {"optical", "measuring", "computing", "sensor"},
    {"power", "channel", "modem", "bandwidth"},
    {"taxonomy", "cross", "indexing", "emerging"},
};

const char *const kFillers[] = {
    "the",        "said",       "method",     "system",   "comprising", "wherein",
    "first",      "second",     "portion",    "member",   "provided",   "having",
    "least",      "one",        "plurality",  "configured", "apparatus", "device",
    "surface",    "end",        "which",      "further",  "includes",   "formed",
    "between",    "arranged",   "each",       "such",     "that",       "being",
    "unit",       "element",    "body",       "section",  "side",       "part",
    "connected",  "position",   "plate",      "support",  "layer",      "region",
    "according",  "claim",      "step",       "process",  "means",      "structure",
    "invention",  "embodiment", "example",    "shown",    "figure",     "thereof",
    "upper",      "lower",      "inner",      "outer",    "base",       "frame",
};

std::string SyntheticWord(const char *prefix, int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, index);
  return buf;
}

}  // namespace

bool SyntheticCorpus::IsKeywordOf(const std::string &token, int label) const {
  const auto &set = keywords.at(label);
  return std::find(set.begin(), set.end(), token) != set.end();
}

bool SyntheticCorpus::IsKeyword(const std::string &token) const {
  for (int k = 0; k < static_cast<int>(keywords.size()); ++k) {
    if (IsKeywordOf(token, k)) return true;
  }
  return false;
}

SyntheticCorpus MakeSyntheticCorpus(const SyntheticOptions &options) {
  if (options.num_classes < 2) throw ConfigError("synthetic corpus needs >= 2 classes");
  if (options.num_documents < 1 || options.tokens_per_document < 1 ||
      options.keywords_per_class < 1 || options.filler_vocabulary < 1 ||
      options.embedding_dim < 1) {
    throw ConfigError("synthetic corpus sizes must be positive");
  }
  if (options.keywords_per_document < 1 ||
      options.keywords_per_document > options.tokens_per_document) {
    throw ConfigError("keywords per document must be in [1, tokens per document]");
  }

  SyntheticCorpus corpus{Dataset{}, {}, {}, EmbeddingTable(options.embedding_dim)};
  const bool builtin = options.num_classes <= 9 && options.keywords_per_class <= 4;
  for (int k = 0; k < options.num_classes; ++k) {
    corpus.dataset.label_map.Intern(builtin ? std::string(kClassNames[k])
                                            : SyntheticWord("class", k));
    std::vector<std::string> set;
    for (int j = 0; j < options.keywords_per_class; ++j) {
      set.push_back(builtin ? std::string(kClassKeywords[k][j])
                            : SyntheticWord("kw", k * options.keywords_per_class + j));
    }
    corpus.keywords.push_back(std::move(set));
  }
  constexpr int kBuiltinFillers = sizeof(kFillers) / sizeof(kFillers[0]);
  for (int j = 0; j < options.filler_vocabulary; ++j) {
    corpus.fillers.push_back(j < kBuiltinFillers ? std::string(kFillers[j])
                                                 : SyntheticWord("filler", j));
  }

  Rng rng(options.seed);
  const int length = options.tokens_per_document;
  for (int n = 0; n < options.num_documents; ++n) {
    const int label = n % options.num_classes;
    std::vector<std::string> tokens(length);
    for (auto &t : tokens) t = corpus.fillers[rng.Below(corpus.fillers.size())];
    // Plant keywords at distinct random positions.
    std::vector<int> positions(length);
    for (int t = 0; t < length; ++t) positions[t] = t;
    rng.Shuffle(positions);
    const auto &set = corpus.keywords[label];
    for (int j = 0; j < options.keywords_per_document; ++j) {
      tokens[positions[j]] = set[rng.Below(set.size())];
    }
    Document doc;
    doc.id = SyntheticWord("doc", n);
    doc.label = label;
    for (const auto &t : tokens) {
      if (!doc.raw_text.empty()) doc.raw_text.push_back(' ');
      doc.raw_text += t;
    }
    doc.tokens = std::move(tokens);
    corpus.dataset.documents.push_back(std::move(doc));
  }

  // Vocabulary vectors, uniform in [-1, 1].
  Rng vector_rng(Mix64(options.seed));
  auto add_vector = [&](const std::string &token) {
    std::vector<Real> v(options.embedding_dim);
    for (auto &x : v) x = static_cast<float>(vector_rng.Uniform(-1.0, 1.0));
    corpus.embeddings.Set(token, std::move(v));
  };
  for (const auto &set : corpus.keywords) {
    for (const auto &w : set) add_vector(w);
  }
  for (const auto &w : corpus.fillers) add_vector(w);
  return corpus;
}

void WriteJsonl(const Dataset &dataset, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto &doc : dataset.documents) {
    nlohmann::json record{{"id", doc.id},
                          {"text", doc.raw_text},
                          {"label", dataset.label_map.Name(doc.label)}};
    out << record.dump() << '\n';
  }
}

void WriteVec(const SyntheticCorpus &corpus, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  std::vector<std::string> vocab;
  for (const auto &set : corpus.keywords) vocab.insert(vocab.end(), set.begin(), set.end());
  vocab.insert(vocab.end(), corpus.fillers.begin(), corpus.fillers.end());
  out << vocab.size() << ' ' << corpus.embeddings.dim() << '\n';
  char buf[32];
  for (const auto &token : vocab) {
    out << token;
    const Vector v = corpus.embeddings.Embed(token);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      // %.9g round-trips 32-bit reals exactly.
      std::snprintf(buf, sizeof(buf), " %.9g", v[k]);
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace lrptext
