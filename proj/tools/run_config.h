// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_TOOLS_RUN_CONFIG_H_
#define LRPTEXT_TOOLS_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lrptext/corpus.h"
#include "lrptext/lrp.h"
#include "lrptext/model.h"
#include "lrptext/train.h"

namespace lrptext::cli {

// Environment variable that overrides output_dir from the config file.
inline constexpr const char *kOutputDirEnv = "LRPTEXT_OUTPUT_DIR";

struct DataConfig {
  std::string train;
  std::string valid;  // optional
  std::string test;   // optional
  std::string format = "auto";  // auto | csv | jsonl
  std::string text_field = "text";
  std::string label_field = "label";
  std::string id_field = "id";
  double train_fraction = 0.8;
  int max_len = 256;
};

struct EmbeddingConfig {
  std::string path;
  int synthetic_dim = 0;  // used when path is empty
};

struct RunConfig {
  DataConfig data;
  EmbeddingConfig embedding;
  Architecture arch = Architecture::kBiLstm;
  ModelHyper hyper;
  TrainConfig train;
  LrpConfig lrp;
  std::string output_dir = "out";
  std::optional<std::uint64_t> seed;

  // Reads a JSON key-value tree over the defaults. Unknown keys and wrong
  // types are ConfigErrors naming the field path (e.g. "train.epochs").
  static RunConfig FromFile(const std::filesystem::path &path);
  void MergeJson(const std::string &text);

  // Checks field values and that referenced input files exist.
  void ValidateForTraining() const;
};

DatasetFormat ResolveFormat(const std::string &format, const std::filesystem::path &path);

}  // namespace lrptext::cli

#endif  // LRPTEXT_TOOLS_RUN_CONFIG_H_
