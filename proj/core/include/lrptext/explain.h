// SPDX-License-Identifier: Apache-2.0
//
// Human-readable explanations: display normalization, HTML heatmaps, JSON
// and top-k word lists.

#ifndef LRPTEXT_EXPLAIN_H_
#define LRPTEXT_EXPLAIN_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrptext/lrp.h"

namespace lrptext {

struct ExplainedToken {
  std::string token;
  int position = 0;
  Real relevance = 0;  // raw, may be negative
  Real intensity = 0;  // display scale in [0, 1]
};

struct Explanation {
  std::string doc_id;
  std::string class_name;            // explained (target) class
  std::string predicted_class_name;
  bool counterfactual = false;       // target differs from the prediction
  Real score = 0;                    // f_c, the target's pre-softmax logit
  Real conservation_residual = 0;
  RelevanceSinks sinks;
  std::vector<ExplainedToken> tokens;
  // No token had positive relevance; every intensity is 0.
  bool no_positive_relevance = false;

  bool operator==(const Explanation &other) const;
};

// max(0, r) / (largest positive r); all zeros when nothing is positive, in
// which case *no_positive (if given) is set.
std::vector<Real> NormalizeScores(std::span<const Real> relevances,
                                  bool *no_positive = nullptr);

Explanation MakeExplanation(const std::string &doc_id, const RelevanceResult &result,
                            const std::vector<std::string> &class_names);

struct HtmlOptions {
  // Shade negative relevance blue (scaled by the most negative score).
  bool show_negative = false;
};

// Self-contained page: one inline-styled span per token with a red
// background whose alpha is the token's intensity. Byte-for-byte
// deterministic.
std::string RenderHtml(const Explanation &explanation, const HtmlOptions &options = {});

// {doc_id, class, predicted_class, counterfactual_target, f_c,
//  conservation_residual, sinks{...}, tokens:[{token, position, relevance,
//  intensity}]}
std::string RenderJson(const Explanation &explanation);
// Inverse of RenderJson. Throws FormatError.
Explanation ParseExplanationJson(const std::string &text);

struct RankedWord {
  std::string token;
  int position = 0;  // position of the highest-scoring occurrence
  Real relevance = 0;
};

// Distinct tokens by their maximum raw relevance, descending; ties go to the
// earliest position. Returns at most k entries (k >= 1).
std::vector<RankedWord> TopKWords(const Explanation &explanation, int k);
// "rank\ttoken\tposition\trelevance" rows.
std::string TopKTsv(const std::vector<RankedWord> &words);

// Writes text to a file; throws Error if the path is not writable.
void WriteTextFile(const std::filesystem::path &path, const std::string &text);

}  // namespace lrptext

#endif  // LRPTEXT_EXPLAIN_H_
