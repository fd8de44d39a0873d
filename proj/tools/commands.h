// SPDX-License-Identifier: Apache-2.0
//
// The train / evaluate / explain / inspect-data commands.

#ifndef LRPTEXT_TOOLS_COMMANDS_H_
#define LRPTEXT_TOOLS_COMMANDS_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "lrptext/explain.h"
#include "lrptext/metrics.h"
#include "lrptext/synthetic.h"
#include "run_config.h"

namespace lrptext::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

EmbeddingTable LoadEmbeddings(const EmbeddingConfig &config);

struct TrainOutputs {
  std::filesystem::path model_path;
  std::filesystem::path history_path;
  std::filesystem::path metrics_path;
  Metrics metrics;
  TrainResult result;
};

// Loads data and embeddings, trains, and writes model.lrpm, history.csv and
// metrics.tsv into config.output_dir. Metrics are computed on data.test,
// else data.valid, else the held-out part of a split of data.train.
TrainOutputs CmdTrain(const RunConfig &config);

struct EvaluateOptions {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  DataConfig data;
  // Overrides the embedding source recorded in the model file.
  std::optional<EmbeddingConfig> embedding;
  std::filesystem::path report_path;  // optional
};

Metrics CmdEvaluate(const EvaluateOptions &options, std::string *report = nullptr);

struct ExplainOptions {
  std::filesystem::path model_path;
  std::string text;
  std::string doc_id = "input";
  std::optional<std::string> target_class;  // class name or index
  int top_k = 10;
  LrpConfig lrp;
  HtmlOptions html;
  std::optional<EmbeddingConfig> embedding;
  std::optional<int> max_len;
  std::filesystem::path output_dir = "out";
};

struct ExplainOutputs {
  std::filesystem::path html_path;
  std::filesystem::path json_path;
  std::filesystem::path topk_path;
  Explanation explanation;
  std::vector<RankedWord> top_words;
  RelevanceResult relevance;
};

ExplainOutputs CmdExplain(const ExplainOptions &options);

struct InspectOutputs {
  std::string table;
  std::string tsv;
};

InspectOutputs CmdInspectData(const std::filesystem::path &data_path, const DataConfig &data,
                              const std::filesystem::path &report_path);

// Writes corpus.jsonl and embeddings.vec (and a matching config.json) into
// `directory`.
void MakeSyntheticData(const SyntheticOptions &options, const std::filesystem::path &directory);

// Full command-line entry point. Returns an ExitCode.
int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace lrptext::cli

#endif  // LRPTEXT_TOOLS_COMMANDS_H_
