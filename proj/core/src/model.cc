// SPDX-License-Identifier: Apache-2.0

#include "lrptext/model.h"

#include <cmath>

#include "lrptext/errors.h"
#include "lrptext/random.h"

namespace lrptext {

namespace {

void GlorotUniform(Tensor &tensor, int fan_in, int fan_out, Rng &rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto &v : tensor.values) {
    v = static_cast<float>(rng.Uniform(-limit, limit));
  }
}

void InitLayer(Layer &layer, Rng &rng) {
  for (auto &p : layer.params) {
    // Biases (rank 1) stay zero.
    if (p.shape.size() < 2) continue;
    int fan_in = p.shape[0];
    int fan_out = p.shape.back();
    if (layer.kind == LayerKind::kConv1d) {
      fan_in = layer.kernel_size * layer.input_dim;
      fan_out = layer.kernel_size * layer.units;
    }
    GlorotUniform(p, fan_in, fan_out, rng);
  }
}

}  // namespace

std::string_view ArchitectureName(Architecture arch) {
  switch (arch) {
    case Architecture::kBiLstm: return "bilstm";
    case Architecture::kCnn: return "cnn";
    case Architecture::kCnnBiLstm: return "cnn_bilstm";
  }
  return "?";
}

Architecture ParseArchitecture(std::string_view name) {
  for (auto a : {Architecture::kBiLstm, Architecture::kCnn, Architecture::kCnnBiLstm}) {
    if (ArchitectureName(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) +
                    "' (expected bilstm, cnn or cnn_bilstm)");
}

std::size_t Model::NumParameters() const {
  std::size_t n = 0;
  for (const auto &layer : layers) n += layer.NumParameters();
  return n;
}

void Model::Validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  int dim = input_dim;
  bool sequence = true;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto &layer = layers[l];
    const std::string where =
        "layer " + std::to_string(l) + " (" + std::string(LayerKindName(layer.kind)) + ")";
    if (layer.input_dim != dim) {
      throw ShapeError(where + " expects " + std::to_string(layer.input_dim) +
                       " inputs but receives " + std::to_string(dim));
    }
    if (layer.ConsumesSequence() != sequence) {
      throw ShapeError(where + (sequence ? " cannot consume a sequence"
                                         : " needs a sequence input"));
    }
    for (const auto &p : layer.params) {
      if (p.values.size() != p.NumElements()) {
        throw ShapeError(where + " parameter '" + p.name + "' has wrong size");
      }
    }
    dim = layer.OutputDim();
    sequence = layer.ProducesSequence();
  }
  const auto &last = layers.back();
  if (last.kind != LayerKind::kDense || last.activation != Activation::kSoftmax ||
      last.units != num_classes) {
    throw ShapeError("final layer must be a softmax dense layer with " +
                     std::to_string(num_classes) + " units");
  }
  if (!class_names.empty() && static_cast<int>(class_names.size()) != num_classes) {
    throw ShapeError("class name count does not match number of classes");
  }
}

Model BuildModel(Architecture arch, int input_dim, int num_classes,
                 const ModelHyper &hyper, std::uint64_t seed) {
  if (input_dim <= 0) throw ConfigError("input dimension must be positive");
  if (num_classes <= 0) throw ConfigError("number of classes must be positive");
  for (int v : {hyper.lstm_units_1, hyper.lstm_units_2, hyper.dense_units,
                hyper.conv_filters, hyper.kernel_size}) {
    if (v <= 0) throw ConfigError("model hyperparameters must be positive");
  }

  Model model;
  model.arch = arch;
  model.input_dim = input_dim;
  model.num_classes = num_classes;
  model.hyper = hyper;
  model.seed = seed;

  auto add_recurrent_head = [&](int in) {
    model.layers.push_back(MakeBiLstm(in, hyper.lstm_units_1, true));
    model.layers.push_back(MakeBiLstm(2 * hyper.lstm_units_1, hyper.lstm_units_2, false));
    model.layers.push_back(
        MakeDense(2 * hyper.lstm_units_2, hyper.dense_units, Activation::kRelu));
    model.layers.push_back(MakeDense(hyper.dense_units, num_classes, Activation::kSoftmax));
  };

  switch (arch) {
    case Architecture::kBiLstm:
      add_recurrent_head(input_dim);
      break;
    case Architecture::kCnn:
      model.layers.push_back(
          MakeConv1d(input_dim, hyper.conv_filters, hyper.kernel_size, Activation::kRelu));
      model.layers.push_back(MakeGlobalAvgPool(hyper.conv_filters));
      model.layers.push_back(MakeDense(hyper.conv_filters, num_classes, Activation::kSoftmax));
      break;
    case Architecture::kCnnBiLstm:
      model.layers.push_back(
          MakeConv1d(input_dim, hyper.conv_filters, hyper.kernel_size, Activation::kRelu));
      add_recurrent_head(hyper.conv_filters);
      break;
  }

  Rng rng(seed);
  for (auto &layer : model.layers) InitLayer(layer, rng);
  model.Validate();
  return model;
}

void RoundParametersToFloat(Model &model) {
  for (auto &layer : model.layers) {
    for (auto &p : layer.params) {
      for (auto &v : p.values) v = static_cast<float>(v);
    }
  }
}

ForwardResult ForwardModel(const Model &model, const Matrix &input, const Mask &mask) {
  if (input.cols() != model.input_dim) {
    throw ShapeError("model expects " + std::to_string(model.input_dim) +
                     "-dimensional embeddings, got " + std::to_string(input.cols()));
  }
  ForwardResult result;
  result.trace.layers.reserve(model.layers.size());
  const Matrix *current = &input;
  const Mask *current_mask = &mask;
  for (const auto &layer : model.layers) {
    result.trace.layers.push_back(ForwardLayer(layer, *current, *current_mask));
    current = &result.trace.layers.back().output;
    current_mask = &result.trace.layers.back().output_mask;
  }
  const auto &last = result.trace.layers.back();
  auto &prediction = result.prediction;
  prediction.logits = last.pre.row(0).transpose();
  prediction.probabilities = last.output.row(0).transpose();
  Eigen::Index best = 0;
  prediction.logits.maxCoeff(&best);
  prediction.predicted_class = static_cast<int>(best);
  prediction.score = prediction.logits[prediction.predicted_class];
  return result;
}

}  // namespace lrptext
