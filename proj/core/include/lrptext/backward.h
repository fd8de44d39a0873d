// SPDX-License-Identifier: Apache-2.0
//
// Hand-derived gradients for every layer kind, driven by a recorded
// ActivationTrace.

#ifndef LRPTEXT_BACKWARD_H_
#define LRPTEXT_BACKWARD_H_

#include <vector>

#include "lrptext/model.h"

namespace lrptext {

// Same layout as the model's parameters.
struct Gradients {
  std::vector<std::vector<Tensor>> layers;

  static Gradients ZerosLike(const Model &model);
  void SetZero();
  // this += scale * other
  void Add(const Gradients &other, Real scale = 1.0);
  Real SquaredNorm() const;
};

// Gradient of the input of `layer` given the gradient of its output.
// Parameter gradients are accumulated into `grads` (one entry per tensor).
// For a softmax dense layer `d_output` is taken to be the gradient with
// respect to the logits.
Matrix BackwardLayer(const Layer &layer, const LayerTrace &trace, const Matrix &d_output,
                     std::vector<Tensor> &grads);

// Backpropagates d_logits through the whole trace, accumulating into grads.
// Throws NumericError naming the first layer whose gradient is not finite.
Matrix BackwardModel(const Model &model, const ActivationTrace &trace,
                     const Vector &d_logits, Gradients &grads);

}  // namespace lrptext

#endif  // LRPTEXT_BACKWARD_H_
