// SPDX-License-Identifier: Apache-2.0

#include "lrptext/lrp.h"

#include <cmath>
#include <limits>

#include "lrptext/errors.h"

namespace lrptext {

namespace {

constexpr Real kTiny = std::numeric_limits<Real>::min();

// R_j / (z_j + eps * sign(z_j)) for every upper neuron.
Vector MessageFactors(const Vector &pre, const Vector &relevance_out, Real epsilon) {
  Vector factors(pre.size());
  for (Eigen::Index j = 0; j < pre.size(); ++j) {
    factors[j] = relevance_out[j] / (pre[j] + epsilon * StabilizerSign(pre[j]));
  }
  return factors;
}

// sum_j (eps * sign(z_j) + delta * b_j) * factor_j: the stabilizer and bias
// mass shared equally by the N lower neurons (before dividing by N).
Real SharedMass(const Vector &pre, const Vector &bias, const Vector &factors,
                const LrpConfig &config) {
  Real mass = 0;
  for (Eigen::Index j = 0; j < pre.size(); ++j) {
    mass += (config.epsilon * StabilizerSign(pre[j]) + config.delta * bias[j]) * factors[j];
  }
  return mass;
}

Real BiasLeak(const Vector &bias, const Vector &factors, const LrpConfig &config) {
  if (config.delta == 1) return 0;
  return bias.dot(factors);
}

}  // namespace

void LrpConfig::Validate() const {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw ConfigError("lrp.epsilon must be a positive number");
  }
  if (delta != 0 && delta != 1) throw ConfigError("lrp.delta must be 0 or 1");
}

RelevanceSinks &RelevanceSinks::operator+=(const RelevanceSinks &other) {
  boundary += other.boundary;
  initial_state += other.initial_state;
  bias += other.bias;
  return *this;
}

Real LayerRelevance::RelativeConservationError() const {
  const Real err = std::abs(relevance_out - (relevance_in + sinks.Total()));
  return err / std::max(std::abs(relevance_out), kTiny);
}

Matrix LrpDenseMessages(const Vector &input, const Matrix &weights, const Vector &bias,
                        const Vector &pre, const Vector &relevance_out,
                        const LrpConfig &config) {
  const Vector factors = MessageFactors(pre, relevance_out, config.epsilon);
  const Real n = static_cast<Real>(input.size());
  Matrix messages(input.size(), pre.size());
  for (Eigen::Index j = 0; j < pre.size(); ++j) {
    const Real share =
        (config.epsilon * StabilizerSign(pre[j]) + config.delta * bias[j]) / n;
    messages.col(j) = (input.cwiseProduct(weights.col(j)).array() + share).matrix() * factors[j];
  }
  return messages;
}

Vector LrpDense(const Vector &input, const Matrix &weights, const Vector &bias,
                const Vector &pre, const Vector &relevance_out, const LrpConfig &config,
                Real *bias_leak) {
  if (weights.rows() != input.size() || weights.cols() != pre.size() ||
      bias.size() != pre.size() || relevance_out.size() != pre.size()) {
    throw ShapeError("lrp: dense shapes are inconsistent");
  }
  const Vector factors = MessageFactors(pre, relevance_out, config.epsilon);
  const Real shared = SharedMass(pre, bias, factors, config) / static_cast<Real>(input.size());
  if (bias_leak != nullptr) *bias_leak += BiasLeak(bias, factors, config);
  return (input.cwiseProduct(weights * factors).array() + shared).matrix();
}

Vector LrpProportional(const Matrix &contributions, const Vector &relevance_out,
                       Real epsilon) {
  if (contributions.cols() != relevance_out.size()) {
    throw ShapeError("lrp: contribution matrix does not match relevance");
  }
  Vector result = Vector::Zero(contributions.rows());
  for (Eigen::Index k = 0; k < contributions.cols(); ++k) {
    const Real total = contributions.col(k).sum();
    const Real denom = total + epsilon * StabilizerSign(total);
    result += contributions.col(k) * (relevance_out[k] / denom);
  }
  return result;
}

Matrix LrpConv1d(const Layer &layer, const LayerTrace &trace, const Matrix &relevance_out,
                 const LrpConfig &config, RelevanceSinks *sinks) {
  const int length = static_cast<int>(trace.input.rows());
  const int k = layer.kernel_size;
  const int pad_left = (k - 1) / 2;
  const int in_dim = layer.input_dim;
  const auto w = layer.param("w").AsMatrix();
  const Vector bias = layer.param("b").AsVector();
  const Real window = static_cast<Real>(k * in_dim);
  const Mask &mask = trace.input_mask;

  Matrix relevance_in = Matrix::Zero(length, in_dim);
  for (int t = 0; t < length; ++t) {
    if (!mask[t]) continue;
    const Vector pre = trace.pre.row(t).transpose();
    const Vector factors = MessageFactors(pre, relevance_out.row(t).transpose(), config.epsilon);
    const Real shared = SharedMass(pre, bias, factors, config) / window;
    if (sinks != nullptr) sinks->bias += BiasLeak(bias, factors, config);
    for (int s = 0; s < k; ++s) {
      const int src = t + s - pad_left;
      if (src < 0 || src >= length || !mask[src]) {
        // Zero inputs: only the shared stabilizer/bias mass arrives here.
        if (sinks != nullptr) sinks->boundary += shared * in_dim;
        continue;
      }
      const Vector weighted = w.middleRows(s * in_dim, in_dim) * factors;
      relevance_in.row(src) +=
          (trace.input.row(src).transpose().cwiseProduct(weighted).array() + shared)
              .matrix()
              .transpose();
    }
  }
  return relevance_in;
}

Matrix LrpGlobalAvgPool(const LayerTrace &trace, const Vector &relevance_out,
                        const LrpConfig &config) {
  const Mask &mask = trace.input_mask;
  const Real n = static_cast<Real>(CountUnmasked(mask));
  const Vector pooled = trace.output.row(0).transpose();
  Matrix relevance_in = Matrix::Zero(trace.input.rows(), trace.input.cols());
  for (Eigen::Index f = 0; f < pooled.size(); ++f) {
    const Real s = StabilizerSign(pooled[f]);
    const Real factor = relevance_out[f] / (pooled[f] + config.epsilon * s);
    for (Eigen::Index t = 0; t < relevance_in.rows(); ++t) {
      if (!mask[t]) continue;
      relevance_in(t, f) = (trace.input(t, f) / n + config.epsilon * s / n) * factor;
    }
  }
  return relevance_in;
}

Matrix LrpRecurrent(const Layer &layer, const LayerTrace &trace,
                    const Matrix &relevance_out, const LrpConfig &config,
                    RelevanceSinks *sinks, Real *gate_relevance) {
  const int u = layer.units;
  const int in_dim = layer.input_dim;
  Matrix relevance_in = Matrix::Zero(trace.input.rows(), in_dim);
  RelevanceSinks local;
  Real gates_total = 0;

  for (int d = 0; d < layer.NumDirections(); ++d) {
    const LstmWeights weights = DirectionWeights(layer, d);
    // Candidate affine map over the stacked input [x; h_prev].
    Matrix candidate_w(in_dim + u, u);
    candidate_w.topRows(in_dim) = weights.wx.middleCols(2 * u, u);
    candidate_w.bottomRows(u) = weights.wh.middleCols(2 * u, u);
    const Vector candidate_b = weights.b.segment(2 * u, u);

    const auto &steps = trace.directions[d].steps;
    const int n = static_cast<int>(steps.size());
    Vector r_h = Vector::Zero(u);
    Vector r_c = Vector::Zero(u);
    Vector stacked(in_dim + u);
    Vector r_prev_c(u);
    Vector r_candidate(u);
    for (int k = n - 1; k >= 0; --k) {
      const LstmStep &step = steps[k];
      if (layer.return_sequences) {
        r_h += relevance_out.block(step.position, d * u, 1, u).transpose();
      } else if (k == n - 1) {
        r_h += relevance_out.block(0, d * u, 1, u).transpose();
      }
      // h_t = o_t * tanh(c_t): everything goes to the cell, nothing to o_t.
      r_c += r_h;
      Vector r_gates = Vector::Zero(3 * u);

      // c_t = f_t * c_{t-1} + i_t * g_t with two contributions per unit.
      const auto i = step.InputGate();
      const auto f = step.ForgetGate();
      const auto g = step.Candidate();
      for (int m = 0; m < u; ++m) {
        const Real carried = f[m] * step.c_prev[m];
        const Real written = i[m] * g[m];
        const Real s = StabilizerSign(step.c[m]);
        const Real factor = r_c[m] / (step.c[m] + config.epsilon * s);
        r_prev_c[m] = (carried + config.epsilon * s / 2) * factor;
        r_candidate[m] = (written + config.epsilon * s / 2) * factor;
      }

      // g_t = tanh(Wx x_t + Wh h_{t-1} + b): tanh is transparent.
      stacked.head(in_dim) = step.x;
      stacked.tail(u) = step.h_prev;
      const Vector r_stacked =
          LrpDense(stacked, candidate_w, candidate_b, step.pre.segment(2 * u, u), r_candidate,
                   config, &local.bias);
      relevance_in.row(step.position) += r_stacked.head(in_dim).transpose();
      r_h = r_stacked.tail(u);
      r_c = r_prev_c;
      gates_total += r_gates.sum();
    }
    local.initial_state += r_h.sum() + r_c.sum();
  }
  if (sinks != nullptr) *sinks += local;
  if (gate_relevance != nullptr) *gate_relevance += gates_total;
  return relevance_in;
}

Matrix LrpLayer(const Layer &layer, const LayerTrace &trace, const Matrix &relevance_out,
                const LrpConfig &config, LayerRelevance *info) {
  LayerRelevance local;
  local.kind = layer.kind;
  local.relevance_out = relevance_out.sum();
  Matrix relevance_in;
  switch (layer.kind) {
    case LayerKind::kDense: {
      const auto w = layer.param("w").AsMatrix();
      relevance_in = LrpDense(trace.input.row(0).transpose(), w, layer.param("b").AsVector(),
                              trace.pre.row(0).transpose(), relevance_out.row(0).transpose(),
                              config, &local.sinks.bias)
                         .transpose();
      break;
    }
    case LayerKind::kConv1d:
      relevance_in = LrpConv1d(layer, trace, relevance_out, config, &local.sinks);
      break;
    case LayerKind::kGlobalAvgPool:
      relevance_in = LrpGlobalAvgPool(trace, relevance_out.row(0).transpose(), config);
      break;
    case LayerKind::kLstm:
    case LayerKind::kBiLstm:
      relevance_in = LrpRecurrent(layer, trace, relevance_out, config, &local.sinks,
                                  &local.gate_relevance);
      break;
  }
  local.relevance_in = relevance_in.sum();
  if (info != nullptr) *info = local;
  return relevance_in;
}

std::vector<TokenRelevance> LrpEmbedding(const Matrix &input_relevance, const Mask &mask,
                                         const std::vector<std::string> &tokens) {
  if (static_cast<Eigen::Index>(mask.size()) != input_relevance.rows()) {
    throw ShapeError("lrp: mask does not match input relevance");
  }
  std::vector<TokenRelevance> result;
  for (Eigen::Index t = 0; t < input_relevance.rows(); ++t) {
    if (!mask[t]) continue;
    TokenRelevance tr;
    tr.position = static_cast<int>(t);
    tr.token = t < static_cast<Eigen::Index>(tokens.size()) ? tokens[t] : std::string();
    tr.relevance = input_relevance.row(t).sum();
    result.push_back(std::move(tr));
  }
  return result;
}

Real RelevanceResult::TokenTotal() const {
  Real total = 0;
  for (const auto &t : tokens) total += t.relevance;
  return total;
}

Real RelevanceResult::RelativeResidual() const {
  return std::abs(conservation_residual) / std::max(std::abs(target_score), kTiny);
}

RelevanceResult PropagateRelevance(const Model &model, const ForwardResult &forward,
                                   const Vector &start, const Mask &input_mask,
                                   const std::vector<std::string> &tokens,
                                   const LrpConfig &config) {
  config.Validate();
  if (start.size() != model.num_classes) throw ShapeError("lrp: start relevance must have K entries");
  RelevanceResult result;
  result.prediction = forward.prediction;
  result.target_score = start.sum();

  Matrix relevance = start.transpose();
  for (int l = static_cast<int>(model.layers.size()) - 1; l >= 0; --l) {
    LayerRelevance info;
    relevance = LrpLayer(model.layers[l], forward.trace.layers[l], relevance, config, &info);
    result.sinks += info.sinks;
    result.gate_relevance += info.gate_relevance;
    result.layers.push_back(info);
  }
  result.input_relevance = std::move(relevance);
  result.tokens = LrpEmbedding(result.input_relevance, input_mask, tokens);
  result.conservation_residual =
      result.target_score - (result.TokenTotal() + result.sinks.Total());
  return result;
}

RelevanceResult ExplainPrediction(const Model &model, const DocumentMatrix &doc,
                                  const std::vector<std::string> &tokens,
                                  std::optional<int> target_class, const LrpConfig &config) {
  if (doc.real_length() == 0) throw DataError("cannot explain an empty document");
  const ForwardResult forward = ForwardModel(model, doc);
  const int target = target_class.value_or(forward.prediction.predicted_class);
  if (target < 0 || target >= model.num_classes) {
    throw ConfigError("target class " + std::to_string(target) + " out of range");
  }
  Vector start = Vector::Zero(model.num_classes);
  start[target] = forward.prediction.logits[target];
  RelevanceResult result = PropagateRelevance(model, forward, start, doc.mask, tokens, config);
  result.target_class = target;
  return result;
}

RelevanceResult ExplainPrediction(const Model &model, const EmbeddingTable &table,
                                  const std::vector<std::string> &tokens, int max_len,
                                  std::optional<int> target_class, const LrpConfig &config) {
  if (tokens.empty()) throw DataError("cannot explain an empty document");
  return ExplainPrediction(model, EmbedDocument(table, tokens, max_len), tokens, target_class,
                           config);
}

}  // namespace lrptext
