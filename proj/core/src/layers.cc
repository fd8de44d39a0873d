// SPDX-License-Identifier: Apache-2.0

#include "lrptext/layers.h"

#include <cmath>

#include "lrptext/errors.h"

namespace lrptext {

namespace {

const char *const kDirectionPrefix[2] = {"fw_", "bw_"};

Real Sigmoid(Real z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const Real e = std::exp(z);
  return e / (1.0 + e);
}

void CheckInput(const Layer &layer, const Matrix &input, const Mask &mask) {
  if (input.cols() != layer.input_dim) {
    throw ShapeError(std::string(LayerKindName(layer.kind)) + " expects " +
                     std::to_string(layer.input_dim) + " input features, got " +
                     std::to_string(input.cols()));
  }
  if (layer.ConsumesSequence() && static_cast<Eigen::Index>(mask.size()) != input.rows()) {
    throw ShapeError("mask length does not match sequence length");
  }
  if (layer.ConsumesSequence() && input.rows() < 1) {
    throw ShapeError("empty sequence");
  }
}

void AddRecurrentParams(Layer &layer) {
  const int u = layer.units;
  for (int d = 0; d < layer.NumDirections(); ++d) {
    const std::string prefix = kDirectionPrefix[d];
    layer.params.emplace_back(prefix + "wx", std::vector<int>{layer.input_dim, 4 * u});
    layer.params.emplace_back(prefix + "wh", std::vector<int>{u, 4 * u});
    layer.params.emplace_back(prefix + "b", std::vector<int>{4 * u});
  }
}

}  // namespace

std::string_view LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kGlobalAvgPool: return "global_avg_pool";
    case LayerKind::kLstm: return "lstm";
    case LayerKind::kBiLstm: return "bilstm";
  }
  return "?";
}

LayerKind ParseLayerKind(std::string_view name) {
  for (auto kind : {LayerKind::kDense, LayerKind::kConv1d, LayerKind::kGlobalAvgPool,
                    LayerKind::kLstm, LayerKind::kBiLstm}) {
    if (LayerKindName(kind) == name) return kind;
  }
  throw FormatError("unknown layer kind '" + std::string(name) + "'");
}

std::string_view ActivationName(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kSoftmax: return "softmax";
  }
  return "?";
}

Activation ParseActivation(std::string_view name) {
  for (auto a : {Activation::kIdentity, Activation::kRelu, Activation::kTanh,
                 Activation::kSigmoid, Activation::kSoftmax}) {
    if (ActivationName(a) == name) return a;
  }
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

const Tensor &Layer::param(std::string_view name) const {
  for (const auto &p : params) {
    if (p.name == name) return p;
  }
  throw ShapeError(std::string(LayerKindName(kind)) + " has no parameter '" +
                   std::string(name) + "'");
}

Tensor &Layer::param(std::string_view name) {
  return const_cast<Tensor &>(static_cast<const Layer &>(*this).param(name));
}

int Layer::OutputDim() const {
  switch (kind) {
    case LayerKind::kDense:
    case LayerKind::kConv1d:
      return units;
    case LayerKind::kGlobalAvgPool:
      return input_dim;
    case LayerKind::kLstm:
    case LayerKind::kBiLstm:
      return NumDirections() * units;
  }
  return 0;
}

bool Layer::ConsumesSequence() const { return kind != LayerKind::kDense; }

bool Layer::ProducesSequence() const {
  switch (kind) {
    case LayerKind::kConv1d: return true;
    case LayerKind::kLstm:
    case LayerKind::kBiLstm: return return_sequences;
    default: return false;
  }
}

std::size_t Layer::NumParameters() const {
  std::size_t n = 0;
  for (const auto &p : params) n += p.NumElements();
  return n;
}

Layer MakeDense(int input_dim, int units, Activation activation) {
  if (input_dim <= 0 || units <= 0) throw ShapeError("dense dimensions must be positive");
  Layer layer;
  layer.kind = LayerKind::kDense;
  layer.activation = activation;
  layer.input_dim = input_dim;
  layer.units = units;
  layer.params.emplace_back("w", std::vector<int>{input_dim, units});
  layer.params.emplace_back("b", std::vector<int>{units});
  return layer;
}

Layer MakeConv1d(int input_dim, int filters, int kernel_size, Activation activation) {
  if (input_dim <= 0 || filters <= 0 || kernel_size <= 0) {
    throw ShapeError("conv1d dimensions must be positive");
  }
  Layer layer;
  layer.kind = LayerKind::kConv1d;
  layer.activation = activation;
  layer.input_dim = input_dim;
  layer.units = filters;
  layer.kernel_size = kernel_size;
  layer.params.emplace_back("w", std::vector<int>{kernel_size, input_dim, filters});
  layer.params.emplace_back("b", std::vector<int>{filters});
  return layer;
}

Layer MakeGlobalAvgPool(int input_dim) {
  Layer layer;
  layer.kind = LayerKind::kGlobalAvgPool;
  layer.input_dim = input_dim;
  return layer;
}

Layer MakeLstm(int input_dim, int units, bool return_sequences) {
  if (input_dim <= 0 || units <= 0) throw ShapeError("lstm dimensions must be positive");
  Layer layer;
  layer.kind = LayerKind::kLstm;
  layer.activation = Activation::kTanh;
  layer.input_dim = input_dim;
  layer.units = units;
  layer.return_sequences = return_sequences;
  AddRecurrentParams(layer);
  return layer;
}

Layer MakeBiLstm(int input_dim, int units, bool return_sequences) {
  Layer layer = MakeLstm(input_dim, units, return_sequences);
  layer.kind = LayerKind::kBiLstm;
  layer.params.clear();
  AddRecurrentParams(layer);
  return layer;
}

Real ApplyActivation(Activation activation, Real z) {
  switch (activation) {
    case Activation::kRelu: return z > 0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kSigmoid: return Sigmoid(z);
    case Activation::kIdentity:
    case Activation::kSoftmax: return z;
  }
  return z;
}

Vector Softmax(const Vector &logits) {
  const Real max = logits.maxCoeff();
  Vector e = (logits.array() - max).exp().matrix();
  return e / e.sum();
}

DenseResult DenseForward(const Layer &layer, const Vector &input) {
  if (layer.kind != LayerKind::kDense) throw ShapeError("not a dense layer");
  if (input.size() != layer.input_dim) {
    throw ShapeError("dense expects " + std::to_string(layer.input_dim) +
                     " inputs, got " + std::to_string(input.size()));
  }
  DenseResult result;
  const auto w = layer.param("w").AsMatrix();
  result.pre = w.transpose() * input + layer.param("b").AsVector();
  if (layer.activation == Activation::kSoftmax) {
    result.output = Softmax(result.pre);
  } else {
    result.output = result.pre.unaryExpr(
        [&](Real z) { return ApplyActivation(layer.activation, z); });
  }
  return result;
}

SequenceResult Conv1dForward(const Layer &layer, const Matrix &input, const Mask &mask) {
  if (layer.kind != LayerKind::kConv1d) throw ShapeError("not a conv1d layer");
  CheckInput(layer, input, mask);
  const int length = static_cast<int>(input.rows());
  const int k = layer.kernel_size;
  const int pad_left = (k - 1) / 2;
  const int in_dim = layer.input_dim;
  // Kernel as (k * in) x filters, one block of `in` rows per kernel offset.
  const auto w = layer.param("w").AsMatrix();
  const auto b = layer.param("b").AsVector();

  SequenceResult result;
  result.pre = Matrix::Zero(length, layer.units);
  result.output = Matrix::Zero(length, layer.units);
  result.mask = mask;
  for (int t = 0; t < length; ++t) {
    if (!mask[t]) continue;
    RowVector z = b.transpose();
    for (int s = 0; s < k; ++s) {
      const int src = t + s - pad_left;
      if (src < 0 || src >= length || !mask[src]) continue;
      z.noalias() += input.row(src) * w.middleRows(s * in_dim, in_dim);
    }
    result.pre.row(t) = z;
    result.output.row(t) =
        z.unaryExpr([&](Real v) { return ApplyActivation(layer.activation, v); });
  }
  return result;
}

Vector GlobalAvgPoolForward(const Matrix &input, const Mask &mask) {
  if (static_cast<Eigen::Index>(mask.size()) != input.rows()) {
    throw ShapeError("mask length does not match sequence length");
  }
  const int n = CountUnmasked(mask);
  if (n == 0) throw ShapeError("global average pooling over a fully masked sequence");
  Vector sum = Vector::Zero(input.cols());
  for (Eigen::Index t = 0; t < input.rows(); ++t) {
    if (mask[t]) sum += input.row(t).transpose();
  }
  return sum / static_cast<Real>(n);
}

LstmWeights DirectionWeights(const Layer &layer, int direction) {
  const std::string prefix = kDirectionPrefix[direction];
  const auto &wx = layer.param(prefix + "wx");
  const auto &wh = layer.param(prefix + "wh");
  const auto &b = layer.param(prefix + "b");
  return LstmWeights{wx.AsMatrix(), wh.AsMatrix(), b.AsVector()};
}

LstmStep LstmCellForward(const LstmWeights &weights, const Vector &x,
                         const Vector &h_prev, const Vector &c_prev) {
  const int u = weights.units();
  if (x.size() != weights.wx.rows() || h_prev.size() != u || c_prev.size() != u) {
    throw ShapeError("lstm cell input shapes do not match weights");
  }
  LstmStep step;
  step.x = x;
  step.h_prev = h_prev;
  step.c_prev = c_prev;
  step.pre = weights.wx.transpose() * x + weights.wh.transpose() * h_prev + weights.b;
  step.gates.resize(4 * u);
  for (int m = 0; m < u; ++m) {
    step.gates[m] = Sigmoid(step.pre[m]);
    step.gates[u + m] = Sigmoid(step.pre[u + m]);
    step.gates[2 * u + m] = std::tanh(step.pre[2 * u + m]);
    step.gates[3 * u + m] = Sigmoid(step.pre[3 * u + m]);
  }
  step.c = step.ForgetGate().cwiseProduct(c_prev) +
           step.InputGate().cwiseProduct(step.Candidate());
  step.h = step.OutputGate().cwiseProduct(step.c.array().tanh().matrix());
  return step;
}

RecurrentResult RecurrentForward(const Layer &layer, const Matrix &input, const Mask &mask) {
  if (layer.kind != LayerKind::kLstm && layer.kind != LayerKind::kBiLstm) {
    throw ShapeError("not a recurrent layer");
  }
  CheckInput(layer, input, mask);
  const int length = static_cast<int>(input.rows());
  const int u = layer.units;

  std::vector<int> positions;
  for (int t = 0; t < length; ++t) {
    if (mask[t]) positions.push_back(t);
  }
  if (positions.empty()) throw ShapeError("recurrent layer over a fully masked sequence");

  RecurrentResult result;
  if (layer.return_sequences) {
    result.output = Matrix::Zero(length, layer.OutputDim());
    result.mask = mask;
  } else {
    result.output = Matrix::Zero(1, layer.OutputDim());
  }

  for (int d = 0; d < layer.NumDirections(); ++d) {
    const LstmWeights weights = DirectionWeights(layer, d);
    DirectionTrace trace;
    trace.reverse = d == 1;
    trace.steps.reserve(positions.size());
    Vector h = Vector::Zero(u);
    Vector c = Vector::Zero(u);
    for (std::size_t k = 0; k < positions.size(); ++k) {
      const int t = trace.reverse ? positions[positions.size() - 1 - k] : positions[k];
      LstmStep step = LstmCellForward(weights, input.row(t).transpose(), h, c);
      step.position = t;
      h = step.h;
      c = step.c;
      if (layer.return_sequences) result.output.block(t, d * u, 1, u) = h.transpose();
      trace.steps.push_back(std::move(step));
    }
    if (!layer.return_sequences) result.output.block(0, d * u, 1, u) = h.transpose();
    result.directions.push_back(std::move(trace));
  }
  return result;
}

LayerTrace ForwardLayer(const Layer &layer, const Matrix &input, const Mask &mask) {
  LayerTrace trace;
  trace.input = input;
  trace.input_mask = mask;
  switch (layer.kind) {
    case LayerKind::kDense: {
      if (input.rows() != 1) throw ShapeError("dense layer expects a vector input");
      auto r = DenseForward(layer, input.row(0).transpose());
      trace.pre = r.pre.transpose();
      trace.output = r.output.transpose();
      break;
    }
    case LayerKind::kConv1d: {
      auto r = Conv1dForward(layer, input, mask);
      trace.pre = std::move(r.pre);
      trace.output = std::move(r.output);
      trace.output_mask = std::move(r.mask);
      break;
    }
    case LayerKind::kGlobalAvgPool: {
      CheckInput(layer, input, mask);
      trace.output = GlobalAvgPoolForward(input, mask).transpose();
      trace.pre = trace.output;
      break;
    }
    case LayerKind::kLstm:
    case LayerKind::kBiLstm: {
      auto r = RecurrentForward(layer, input, mask);
      trace.output = std::move(r.output);
      trace.output_mask = std::move(r.mask);
      trace.directions = std::move(r.directions);
      break;
    }
  }
  return trace;
}

}  // namespace lrptext
