// SPDX-License-Identifier: Apache-2.0

#include "lrptext/backward.h"

#include <cmath>

#include "lrptext/errors.h"

namespace lrptext {

namespace {

// Derivative of the activation expressed through its input and output.
Real ActivationDerivative(Activation activation, Real pre, Real out) {
  switch (activation) {
    case Activation::kRelu: return pre > 0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - out * out;
    case Activation::kSigmoid: return out * (1.0 - out);
    case Activation::kIdentity:
    case Activation::kSoftmax: return 1.0;
  }
  return 1.0;
}

Matrix DenseBackward(const Layer &layer, const LayerTrace &trace, const Matrix &d_output,
                     std::vector<Tensor> &grads) {
  RowVector d_pre = d_output.row(0);
  if (layer.activation != Activation::kSoftmax) {
    for (Eigen::Index k = 0; k < d_pre.size(); ++k) {
      d_pre[k] *= ActivationDerivative(layer.activation, trace.pre(0, k), trace.output(0, k));
    }
  }
  grads[0].AsMatrix().noalias() += trace.input.row(0).transpose() * d_pre;
  grads[1].AsVector() += d_pre.transpose();
  return d_pre * layer.param("w").AsMatrix().transpose();
}

Matrix ConvBackward(const Layer &layer, const LayerTrace &trace, const Matrix &d_output,
                    std::vector<Tensor> &grads) {
  const int length = static_cast<int>(trace.input.rows());
  const int k = layer.kernel_size;
  const int pad_left = (k - 1) / 2;
  const int in_dim = layer.input_dim;
  const auto w = layer.param("w").AsMatrix();
  auto dw = grads[0].AsMatrix();
  auto db = grads[1].AsVector();
  const Mask &mask = trace.input_mask;

  Matrix d_input = Matrix::Zero(length, in_dim);
  for (int t = 0; t < length; ++t) {
    if (!mask[t]) continue;
    RowVector d_pre = d_output.row(t);
    for (Eigen::Index f = 0; f < d_pre.size(); ++f) {
      d_pre[f] *= ActivationDerivative(layer.activation, trace.pre(t, f), trace.output(t, f));
    }
    db += d_pre.transpose();
    for (int s = 0; s < k; ++s) {
      const int src = t + s - pad_left;
      if (src < 0 || src >= length || !mask[src]) continue;
      dw.middleRows(s * in_dim, in_dim).noalias() += trace.input.row(src).transpose() * d_pre;
      d_input.row(src).noalias() += d_pre * w.middleRows(s * in_dim, in_dim).transpose();
    }
  }
  return d_input;
}

Matrix PoolBackward(const LayerTrace &trace, const Matrix &d_output) {
  const int n = CountUnmasked(trace.input_mask);
  Matrix d_input = Matrix::Zero(trace.input.rows(), trace.input.cols());
  for (Eigen::Index t = 0; t < d_input.rows(); ++t) {
    if (trace.input_mask[t]) d_input.row(t) = d_output.row(0) / static_cast<Real>(n);
  }
  return d_input;
}

Matrix RecurrentBackward(const Layer &layer, const LayerTrace &trace,
                         const Matrix &d_output, std::vector<Tensor> &grads) {
  const int u = layer.units;
  Matrix d_input = Matrix::Zero(trace.input.rows(), trace.input.cols());

  for (int d = 0; d < layer.NumDirections(); ++d) {
    const LstmWeights weights = DirectionWeights(layer, d);
    auto dwx = grads[3 * d].AsMatrix();
    auto dwh = grads[3 * d + 1].AsMatrix();
    auto db = grads[3 * d + 2].AsVector();
    const auto &steps = trace.directions[d].steps;

    Vector dh_next = Vector::Zero(u);
    Vector dc_next = Vector::Zero(u);
    Vector d_pre(4 * u);
    for (int k = static_cast<int>(steps.size()) - 1; k >= 0; --k) {
      const LstmStep &step = steps[k];
      Vector dh = dh_next;
      if (layer.return_sequences) {
        dh += d_output.block(step.position, d * u, 1, u).transpose();
      } else if (k + 1 == static_cast<int>(steps.size())) {
        dh += d_output.block(0, d * u, 1, u).transpose();
      }
      const auto i = step.InputGate();
      const auto f = step.ForgetGate();
      const auto g = step.Candidate();
      const auto o = step.OutputGate();
      const Vector tanh_c = step.c.array().tanh().matrix();

      const Vector dc = dc_next + (dh.array() * o.array() * (1.0 - tanh_c.array().square())).matrix();
      d_pre.segment(0, u) = (dc.array() * g.array() * i.array() * (1.0 - i.array())).matrix();
      d_pre.segment(u, u) =
          (dc.array() * step.c_prev.array() * f.array() * (1.0 - f.array())).matrix();
      d_pre.segment(2 * u, u) = (dc.array() * i.array() * (1.0 - g.array().square())).matrix();
      d_pre.segment(3 * u, u) =
          (dh.array() * tanh_c.array() * o.array() * (1.0 - o.array())).matrix();

      dwx.noalias() += step.x * d_pre.transpose();
      dwh.noalias() += step.h_prev * d_pre.transpose();
      db += d_pre;
      d_input.row(step.position).noalias() += (weights.wx * d_pre).transpose();
      dh_next.noalias() = weights.wh * d_pre;
      dc_next = (dc.array() * f.array()).matrix();
    }
  }
  return d_input;
}

bool AllFinite(const std::vector<Tensor> &tensors) {
  for (const auto &t : tensors) {
    for (Real v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace

Gradients Gradients::ZerosLike(const Model &model) {
  Gradients grads;
  grads.layers.reserve(model.layers.size());
  for (const auto &layer : model.layers) {
    std::vector<Tensor> tensors;
    for (const auto &p : layer.params) tensors.emplace_back(p.name, p.shape);
    grads.layers.push_back(std::move(tensors));
  }
  return grads;
}

void Gradients::SetZero() {
  for (auto &layer : layers) {
    for (auto &t : layer) std::fill(t.values.begin(), t.values.end(), 0.0);
  }
}

void Gradients::Add(const Gradients &other, Real scale) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t p = 0; p < layers[l].size(); ++p) {
      layers[l][p].AsVector() += scale * other.layers[l][p].AsVector();
    }
  }
}

Real Gradients::SquaredNorm() const {
  Real sum = 0;
  for (const auto &layer : layers) {
    for (const auto &t : layer) sum += t.AsVector().squaredNorm();
  }
  return sum;
}

Matrix BackwardLayer(const Layer &layer, const LayerTrace &trace, const Matrix &d_output,
                     std::vector<Tensor> &grads) {
  switch (layer.kind) {
    case LayerKind::kDense: return DenseBackward(layer, trace, d_output, grads);
    case LayerKind::kConv1d: return ConvBackward(layer, trace, d_output, grads);
    case LayerKind::kGlobalAvgPool: return PoolBackward(trace, d_output);
    case LayerKind::kLstm:
    case LayerKind::kBiLstm: return RecurrentBackward(layer, trace, d_output, grads);
  }
  return {};
}

Matrix BackwardModel(const Model &model, const ActivationTrace &trace,
                     const Vector &d_logits, Gradients &grads) {
  if (!d_logits.allFinite()) throw NumericError("non-finite loss gradient at the output");
  Matrix d_output = d_logits.transpose();
  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    const auto &layer = model.layers[l];
    d_output = BackwardLayer(layer, trace.layers[l], d_output, grads.layers[l]);
    if (!d_output.allFinite() || !AllFinite(grads.layers[l])) {
      throw NumericError("non-finite gradient in layer " + std::to_string(l) + " (" +
                         std::string(LayerKindName(layer.kind)) + ")");
    }
  }
  return d_output;
}

}  // namespace lrptext
