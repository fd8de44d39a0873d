// SPDX-License-Identifier: Apache-2.0
//
// Layer definitions and recorded forward passes. Every forward function
// records the quantities that relevance propagation and backpropagation
// need: layer inputs, pre-activation sums and outputs, plus per-timestep
// gate values for recurrent layers.

#ifndef LRPTEXT_LAYERS_H_
#define LRPTEXT_LAYERS_H_

#include <string>
#include <string_view>
#include <vector>

#include "lrptext/tensor.h"

namespace lrptext {

enum class LayerKind { kDense, kConv1d, kGlobalAvgPool, kLstm, kBiLstm };
enum class Activation { kIdentity, kRelu, kTanh, kSigmoid, kSoftmax };

std::string_view LayerKindName(LayerKind kind);
LayerKind ParseLayerKind(std::string_view name);
std::string_view ActivationName(Activation activation);
Activation ParseActivation(std::string_view name);

// Parameter naming:
//   dense     w [in, units], b [units]
//   conv1d    w [kernel, in, filters], b [filters]
//   lstm      fw_wx [in, 4u], fw_wh [u, 4u], fw_b [4u]
//   bilstm    the lstm tensors plus bw_wx, bw_wh, bw_b
// Recurrent gate blocks are laid out as [input | forget | candidate | output].
struct Layer {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kIdentity;
  int input_dim = 0;
  // Dense units, conv filters, or recurrent units per direction.
  int units = 0;
  int kernel_size = 0;
  // Recurrent layers only: emit every timestep, or just the final states.
  bool return_sequences = true;
  std::vector<Tensor> params;

  const Tensor &param(std::string_view name) const;
  Tensor &param(std::string_view name);

  int OutputDim() const;
  bool ConsumesSequence() const;
  bool ProducesSequence() const;
  int NumDirections() const { return kind == LayerKind::kBiLstm ? 2 : 1; }
  std::size_t NumParameters() const;
};

Layer MakeDense(int input_dim, int units, Activation activation);
Layer MakeConv1d(int input_dim, int filters, int kernel_size, Activation activation);
Layer MakeGlobalAvgPool(int input_dim);
Layer MakeLstm(int input_dim, int units, bool return_sequences);
Layer MakeBiLstm(int input_dim, int units, bool return_sequences);

Real ApplyActivation(Activation activation, Real z);
Vector Softmax(const Vector &logits);

// ---------------------------------------------------------------------------
// Recorded state

struct LstmStep {
  int position = 0;
  Vector x;
  Vector h_prev;
  Vector c_prev;
  Vector pre;    // 4u affine pre-activations
  Vector gates;  // 4u activated: sigmoid(i), sigmoid(f), tanh(g), sigmoid(o)
  Vector c;
  Vector h;

  Eigen::Index Units() const { return gates.size() / 4; }
  auto InputGate() const { return gates.segment(0, Units()); }
  auto ForgetGate() const { return gates.segment(Units(), Units()); }
  auto Candidate() const { return gates.segment(2 * Units(), Units()); }
  auto OutputGate() const { return gates.segment(3 * Units(), Units()); }
};

struct DirectionTrace {
  bool reverse = false;
  // In processing order (right to left for the reverse direction).
  std::vector<LstmStep> steps;
};

struct LayerTrace {
  // Vector-valued layers use a single row and an empty mask.
  Matrix input;
  Mask input_mask;
  Matrix pre;
  Matrix output;
  Mask output_mask;
  std::vector<DirectionTrace> directions;
};

struct ActivationTrace {
  std::vector<LayerTrace> layers;
};

// ---------------------------------------------------------------------------
// Forward passes

struct DenseResult {
  Vector pre;
  Vector output;
};

// pre[k] = sum_i input[i] * w[i][k] + b[k]; output = activation(pre).
DenseResult DenseForward(const Layer &layer, const Vector &input);

struct SequenceResult {
  Matrix pre;
  Matrix output;
  Mask mask;
};

// Same-padded 1-D convolution. Masked input rows are read as zeros and
// masked output rows are zero.
SequenceResult Conv1dForward(const Layer &layer, const Matrix &input, const Mask &mask);

// Mean over unmasked rows. Throws ShapeError if every row is masked.
Vector GlobalAvgPoolForward(const Matrix &input, const Mask &mask);

struct LstmWeights {
  ConstMatrixMap wx;  // in x 4u
  ConstMatrixMap wh;  // u x 4u
  ConstVectorMap b;   // 4u
  int units() const { return static_cast<int>(wh.rows()); }
};

LstmWeights DirectionWeights(const Layer &layer, int direction);

LstmStep LstmCellForward(const LstmWeights &weights, const Vector &x,
                         const Vector &h_prev, const Vector &c_prev);

struct RecurrentResult {
  // T x (directions * units) for sequences, 1 x (directions * units) for
  // final states: forward direction's last step then the reverse
  // direction's last processed step (the first position).
  Matrix output;
  Mask mask;
  std::vector<DirectionTrace> directions;
};

// Runs each direction over the unmasked positions only; masked rows of the
// output are zero.
RecurrentResult RecurrentForward(const Layer &layer, const Matrix &input, const Mask &mask);

// Dispatches on the layer kind and records everything in a LayerTrace.
LayerTrace ForwardLayer(const Layer &layer, const Matrix &input, const Mask &mask);

}  // namespace lrptext

#endif  // LRPTEXT_LAYERS_H_
