// SPDX-License-Identifier: Apache-2.0
//
// Minibatch training with softmax cross-entropy, SGD or Adam, early stopping
// on validation macro-F1, and evaluation.

#ifndef LRPTEXT_TRAIN_H_
#define LRPTEXT_TRAIN_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lrptext/backward.h"
#include "lrptext/corpus.h"
#include "lrptext/embedding.h"
#include "lrptext/metrics.h"
#include "lrptext/model.h"

namespace lrptext {

enum class OptimizerKind { kSgd, kAdam };

OptimizerKind ParseOptimizer(std::string_view name);
std::string_view OptimizerName(OptimizerKind kind);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Optional per-class loss weights (length K).
  std::vector<double> class_weights;
  // Epochs without validation macro-F1 improvement before stopping; 0
  // disables early stopping.
  int patience = 3;

  // Throws ConfigError.
  void Validate(int num_classes) const;
};

// An embedded document ready for the model.
struct Example {
  DocumentMatrix doc;
  int label = 0;
  // Multiplies the class weight; 1 for ordinary samples.
  Real weight = 1.0;
};

std::vector<Example> EncodeDataset(const Dataset &dataset, const EmbeddingTable &table,
                                   int max_len);

// -weight * log(max(prob[gold], 1e-12))
Real CrossEntropyLoss(const Vector &probabilities, int gold, Real weight = 1.0);

struct BatchGradients {
  // sum_n w_n * CE_n / normalizer
  Real loss = 0;
  Gradients grads;
};

// Loss and analytic gradients for a batch. The per-sample weight is
// example.weight times the class weight (if any); the sum is divided by
// `normalizer` (the nominal batch size during training).
BatchGradients ComputeBatchGradients(const Model &model,
                                     std::span<const Example *const> batch,
                                     const std::vector<double> &class_weights,
                                     Real normalizer);

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig &config) : config_(config) {}
  void Apply(Model &model, const Gradients &grads);

 private:
  TrainConfig config_;
  Gradients first_moment_;
  Gradients second_moment_;
  long step_ = 0;
};

// Holds optimizer state across steps.
class Trainer {
 public:
  Trainer(Model &model, const TrainConfig &config);

  // One optimizer update from a non-empty batch; returns the batch loss.
  // Throws NumericError on non-finite loss or gradients.
  Real TrainStep(std::span<const Example *const> batch);

 private:
  Model &model_;
  TrainConfig config_;
  Optimizer optimizer_;
};

struct EpochRecord {
  int epoch = 0;
  Real loss = 0;
  // Negative when no validation set was supplied.
  Real val_macro_f1 = -1;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  bool stopped_early = false;
  int best_epoch = 0;
};

// Trains `model` in place. Deterministic under config.seed. When early
// stopping triggers the parameters of the best validation epoch are
// restored. Parameters are rounded to 32-bit reals at the end so the model
// file holds them exactly.
TrainResult Train(Model &model, const std::vector<Example> &train,
                  const std::vector<Example> *valid, const TrainConfig &config);

// Throws DataError when the model cannot score data labelled with `labels`.
void CheckLabelCompatibility(const Model &model, const LabelMap &labels);

std::vector<int> PredictClasses(const Model &model, const std::vector<Example> &examples);
Metrics Evaluate(const Model &model, const std::vector<Example> &examples);

// "epoch,loss,val_macro_f1" CSV.
std::string HistoryCsv(const std::vector<EpochRecord> &history);

}  // namespace lrptext

#endif  // LRPTEXT_TRAIN_H_
