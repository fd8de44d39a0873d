// SPDX-License-Identifier: Apache-2.0

#include "lrptext/train.h"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <spdlog/spdlog.h>

#include "lrptext/errors.h"
#include "lrptext/random.h"

namespace lrptext {

OptimizerKind ParseOptimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

std::string_view OptimizerName(OptimizerKind kind) {
  return kind == OptimizerKind::kSgd ? "sgd" : "adam";
}

void TrainConfig::Validate(int num_classes) const {
  if (epochs <= 0) throw ConfigError("train.epochs must be positive");
  if (batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be a finite non-negative number");
  }
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) {
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0)) throw ConfigError("train.adam_epsilon must be positive");
  if (patience < 0) throw ConfigError("train.patience must be non-negative");
  if (!class_weights.empty()) {
    if (static_cast<int>(class_weights.size()) != num_classes) {
      throw ConfigError("train.class_weights has " + std::to_string(class_weights.size()) +
                        " entries for " + std::to_string(num_classes) + " classes");
    }
    for (double w : class_weights) {
      if (!(w > 0) || !std::isfinite(w)) {
        throw ConfigError("train.class_weights must be positive");
      }
    }
  }
}

std::vector<Example> EncodeDataset(const Dataset &dataset, const EmbeddingTable &table,
                                   int max_len) {
  std::vector<Example> examples;
  examples.reserve(dataset.size());
  for (const auto &doc : dataset.documents) {
    examples.push_back(Example{EmbedDocument(table, doc.tokens, max_len), doc.label, 1.0});
  }
  return examples;
}

Real CrossEntropyLoss(const Vector &probabilities, int gold, Real weight) {
  if (gold < 0 || gold >= probabilities.size()) throw DataError("gold class out of range");
  return -weight * std::log(std::max<Real>(probabilities[gold], 1e-12));
}

BatchGradients ComputeBatchGradients(const Model &model,
                                     std::span<const Example *const> batch,
                                     const std::vector<double> &class_weights,
                                     Real normalizer) {
  BatchGradients out{0.0, Gradients::ZerosLike(model)};
  for (const Example *example : batch) {
    Real weight = example->weight;
    if (!class_weights.empty()) weight *= class_weights.at(example->label);
    const Real scale = weight / normalizer;

    auto forward = ForwardModel(model, example->doc);
    const Vector &probs = forward.prediction.probabilities;
    out.loss += CrossEntropyLoss(probs, example->label, scale);
    // d(-log softmax_y)/d logits = p - onehot(y)
    Vector d_logits = probs;
    d_logits[example->label] -= 1.0;
    d_logits *= scale;
    BackwardModel(model, forward.trace, d_logits, out.grads);
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite batch loss");
  return out;
}

void Optimizer::Apply(Model &model, const Gradients &grads) {
  const Real lr = config_.learning_rate;
  if (config_.optimizer == OptimizerKind::kSgd) {
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      for (std::size_t p = 0; p < model.layers[l].params.size(); ++p) {
        model.layers[l].params[p].AsVector() -= lr * grads.layers[l][p].AsVector();
      }
    }
    return;
  }

  if (step_ == 0) {
    first_moment_ = Gradients::ZerosLike(model);
    second_moment_ = Gradients::ZerosLike(model);
  }
  ++step_;
  const Real b1 = config_.beta1;
  const Real b2 = config_.beta2;
  const Real correction1 = 1.0 - std::pow(b1, static_cast<Real>(step_));
  const Real correction2 = 1.0 - std::pow(b2, static_cast<Real>(step_));
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    for (std::size_t p = 0; p < model.layers[l].params.size(); ++p) {
      const ConstVectorMap g = grads.layers[l][p].AsVector();
      VectorMap m = first_moment_.layers[l][p].AsVector();
      VectorMap v = second_moment_.layers[l][p].AsVector();
      VectorMap param = model.layers[l].params[p].AsVector();
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseAbs2();
      param.array() -= lr * (m.array() / correction1) /
                       ((v.array() / correction2).sqrt() + config_.adam_epsilon);
    }
  }
}

Trainer::Trainer(Model &model, const TrainConfig &config)
    : model_(model), config_(config), optimizer_(config) {
  config_.Validate(model.num_classes);
}

Real Trainer::TrainStep(std::span<const Example *const> batch) {
  if (batch.empty()) throw DataError("empty training batch");
  auto result = ComputeBatchGradients(model_, batch, config_.class_weights,
                                      static_cast<Real>(config_.batch_size));
  optimizer_.Apply(model_, result.grads);
  return result.loss;
}

TrainResult Train(Model &model, const std::vector<Example> &train,
                  const std::vector<Example> *valid, const TrainConfig &config) {
  if (train.empty()) throw DataError("empty training set");
  for (const auto &e : train) {
    if (e.label < 0 || e.label >= model.num_classes) {
      throw DataError("training label out of range for the model");
    }
  }
  const bool use_valid = valid != nullptr && !valid->empty();

  Trainer trainer(model, config);
  Rng rng(config.seed);
  std::vector<const Example *> order;
  order.reserve(train.size());
  for (const auto &e : train) order.push_back(&e);

  TrainResult result;
  Model best = model;
  Real best_f1 = -1;
  int since_best = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.Shuffle(order);
    Real weighted_loss = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::span<const Example *const> batch(order.data() + start, end - start);
      weighted_loss += trainer.TrainStep(batch) * config.batch_size;
    }
    EpochRecord record;
    record.epoch = epoch;
    record.loss = weighted_loss / static_cast<Real>(train.size());
    if (use_valid) record.val_macro_f1 = Evaluate(model, *valid).macro_f1;
    result.history.push_back(record);
    spdlog::debug("epoch {} loss {:.6f} val_macro_f1 {:.4f}", epoch, record.loss,
                  record.val_macro_f1);

    if (!use_valid || config.patience == 0) continue;
    if (record.val_macro_f1 > best_f1) {
      best_f1 = record.val_macro_f1;
      best = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      model = best;
      result.stopped_early = true;
      break;
    }
  }
  if (!result.stopped_early) result.best_epoch = static_cast<int>(result.history.size());
  RoundParametersToFloat(model);
  return result;
}

void CheckLabelCompatibility(const Model &model, const LabelMap &labels) {
  if (model.num_classes != labels.size()) {
    throw DataError("model predicts " + std::to_string(model.num_classes) +
                    " classes but the dataset has " + std::to_string(labels.size()));
  }
  if (!model.class_names.empty() && model.class_names != labels.names()) {
    throw DataError("dataset class names do not match the model's label map");
  }
}

std::vector<int> PredictClasses(const Model &model, const std::vector<Example> &examples) {
  std::vector<int> predicted;
  predicted.reserve(examples.size());
  for (const auto &e : examples) {
    predicted.push_back(ForwardModel(model, e.doc).prediction.predicted_class);
  }
  return predicted;
}

Metrics Evaluate(const Model &model, const std::vector<Example> &examples) {
  if (examples.empty()) throw DataError("cannot evaluate an empty dataset");
  std::vector<int> gold;
  gold.reserve(examples.size());
  for (const auto &e : examples) gold.push_back(e.label);
  return ComputeMetrics(gold, PredictClasses(model, examples), model.num_classes);
}

std::string HistoryCsv(const std::vector<EpochRecord> &history) {
  std::ostringstream out;
  out << "epoch,loss,val_macro_f1\n" << std::setprecision(8);
  for (const auto &r : history) {
    out << r.epoch << ',' << r.loss << ',';
    if (r.val_macro_f1 >= 0) out << r.val_macro_f1;
    out << '\n';
  }
  return out.str();
}

}  // namespace lrptext
