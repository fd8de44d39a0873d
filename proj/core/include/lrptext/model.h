// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_MODEL_H_
#define LRPTEXT_MODEL_H_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lrptext/embedding.h"
#include "lrptext/layers.h"

namespace lrptext {

enum class Architecture { kBiLstm, kCnn, kCnnBiLstm };

std::string_view ArchitectureName(Architecture arch);
// Throws ConfigError for unknown names.
Architecture ParseArchitecture(std::string_view name);

struct ModelHyper {
  int lstm_units_1 = 64;
  int lstm_units_2 = 32;
  int dense_units = 64;
  int conv_filters = 128;
  int kernel_size = 5;
};

struct Model {
  Architecture arch = Architecture::kBiLstm;
  int input_dim = 0;
  int num_classes = 0;
  ModelHyper hyper;
  std::uint64_t seed = 0;
  std::vector<Layer> layers;
  // Optional; carried through the model file so predictions can be named.
  std::vector<std::string> class_names;
  // Free-form provenance persisted with the model (embedding source,
  // maximum sequence length, ...).
  std::map<std::string, std::string> metadata;

  std::size_t NumParameters() const;
  // Consecutive dimensions line up, sequence/vector kinds alternate
  // correctly and the last layer is a softmax dense with num_classes units.
  // Throws ShapeError otherwise.
  void Validate() const;
};

// Layer stacks:
//   bilstm      BiLSTM(u1) -> BiLSTM(u2, final states) -> Dense(h, relu) -> Dense(K, softmax)
//   cnn         Conv1D(filters, kernel, relu) -> GlobalAvgPool -> Dense(K, softmax)
//   cnn_bilstm  Conv1D -> BiLSTM(u1) -> BiLSTM(u2, final states) -> Dense(h, relu)
//               -> Dense(K, softmax)
// Weights are Glorot-uniform under `seed` (rounded to 32-bit reals so they
// persist exactly); biases are zero.
Model BuildModel(Architecture arch, int input_dim, int num_classes,
                 const ModelHyper &hyper, std::uint64_t seed);

// Rounds every parameter to the nearest 32-bit real.
void RoundParametersToFloat(Model &model);

struct Prediction {
  Vector logits;
  Vector probabilities;
  int predicted_class = 0;
  // Pre-softmax logit of the predicted class.
  Real score = 0;
};

struct ForwardResult {
  Prediction prediction;
  ActivationTrace trace;
};

ForwardResult ForwardModel(const Model &model, const Matrix &input, const Mask &mask);
inline ForwardResult ForwardModel(const Model &model, const DocumentMatrix &doc) {
  return ForwardModel(model, doc.values, doc.mask);
}

}  // namespace lrptext

#endif  // LRPTEXT_MODEL_H_
