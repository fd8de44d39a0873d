// SPDX-License-Identifier: Apache-2.0
//
// Layer-wise relevance propagation with the epsilon-stabilized rule.
//
// For an affine map z_j = sum_i z_i w_ij + b_j over N lower neurons, upper
// relevance R_j is split into messages
//
//   R_{i<-j} = (z_i w_ij + (eps * sign(z_j) + delta * b_j) / N)
//              / (z_j + eps * sign(z_j)) * R_j
//
// and R_i = sum_j R_{i<-j}. With delta = 1 the messages of neuron j sum to
// R_j exactly; with delta = 0 the bias share b_j / (z_j + eps sign z_j) R_j
// is not passed down and is accounted as a bias leak. sign(0) is +1.
//
// Recurrent layers follow the signal path: gates receive no relevance,
// h_t = o_t * tanh(c_t) hands all of R(h_t) to c_t, the sum
// c_t = f_t * c_{t-1} + i_t * g_t splits R(c_t) between its two terms, and
// the candidate g_t distributes to x_t and h_{t-1} through its affine map.
// Relevance reaching zero padding or the initial recurrent state is kept in
// named sinks so totals can be audited.

#ifndef LRPTEXT_LRP_H_
#define LRPTEXT_LRP_H_

#include <optional>
#include <string>
#include <vector>

#include "lrptext/embedding.h"
#include "lrptext/model.h"

namespace lrptext {

struct LrpConfig {
  Real epsilon = 0.001;
  int delta = 1;

  // Throws ConfigError unless epsilon > 0 and delta is 0 or 1.
  void Validate() const;
};

inline Real StabilizerSign(Real z) { return z >= 0 ? 1.0 : -1.0; }

// Relevance that leaves the token path.
struct RelevanceSinks {
  Real boundary = 0;       // conv windows over zero padding / masked rows
  Real initial_state = 0;  // h_0 and c_0 of recurrent layers
  Real bias = 0;           // bias shares withheld when delta = 0

  Real Total() const { return boundary + initial_state + bias; }
  RelevanceSinks &operator+=(const RelevanceSinks &other);
};

// Bookkeeping for one layer of a backward relevance pass.
struct LayerRelevance {
  LayerKind kind = LayerKind::kDense;
  Real relevance_out = 0;  // total arriving from above
  Real relevance_in = 0;   // total passed to the layer's input
  RelevanceSinks sinks;
  // Sum of relevance assigned to i/f/o gate neurons (recurrent layers).
  Real gate_relevance = 0;

  // |out - (in + sinks)| / max(|out|, tiny)
  Real RelativeConservationError() const;
};

// The full message matrix R_{i<-j} (rows i, columns j).
Matrix LrpDenseMessages(const Vector &input, const Matrix &weights, const Vector &bias,
                        const Vector &pre, const Vector &relevance_out,
                        const LrpConfig &config);

// R_i for an affine map given its recorded input, weights (in x out), bias,
// pre-activations and output relevance. Adds withheld bias relevance
// (delta = 0) to *bias_leak when provided.
Vector LrpDense(const Vector &input, const Matrix &weights, const Vector &bias,
                const Vector &pre, const Vector &relevance_out, const LrpConfig &config,
                Real *bias_leak = nullptr);

// Proportional split R_j = sum_k z_jk / (sum_j z_jk + eps sign) * R_k for a
// contribution matrix (rows j, columns k).
Vector LrpProportional(const Matrix &contributions, const Vector &relevance_out,
                       Real epsilon);

// Relevance of a conv layer's input rows (T x in). Shares that land on zero
// padding or masked rows go to sinks->boundary.
Matrix LrpConv1d(const Layer &layer, const LayerTrace &trace, const Matrix &relevance_out,
                 const LrpConfig &config, RelevanceSinks *sinks);

// Pooling as the linear map with weights 1/n over the n unmasked rows.
Matrix LrpGlobalAvgPool(const LayerTrace &trace, const Vector &relevance_out,
                        const LrpConfig &config);

// Relevance of a recurrent layer's input rows. `relevance_out` is shaped like
// the layer output (T x dirs*u, or 1 x dirs*u for final states).
Matrix LrpRecurrent(const Layer &layer, const LayerTrace &trace,
                    const Matrix &relevance_out, const LrpConfig &config,
                    RelevanceSinks *sinks, Real *gate_relevance);

// Dispatch on the layer kind. Fills `info` when given.
Matrix LrpLayer(const Layer &layer, const LayerTrace &trace, const Matrix &relevance_out,
                const LrpConfig &config, LayerRelevance *info);

struct TokenRelevance {
  std::string token;
  int position = 0;
  Real relevance = 0;
};

// Sums each unmasked row of the input relevance into one score per token.
std::vector<TokenRelevance> LrpEmbedding(const Matrix &input_relevance, const Mask &mask,
                                         const std::vector<std::string> &tokens);

struct RelevanceResult {
  Prediction prediction;
  int target_class = 0;
  // Pre-softmax logit of the target class: the relevance injected at the top.
  Real target_score = 0;
  Matrix input_relevance;  // T x d
  std::vector<TokenRelevance> tokens;
  RelevanceSinks sinks;
  // Ordered from the output layer down.
  std::vector<LayerRelevance> layers;
  Real gate_relevance = 0;
  // target_score - (sum of token relevances + sinks)
  Real conservation_residual = 0;

  Real RelativeResidual() const;
  Real TokenTotal() const;
};

// Propagates `start` (relevance per output logit) down a recorded trace.
RelevanceResult PropagateRelevance(const Model &model, const ForwardResult &forward,
                                   const Vector &start, const Mask &input_mask,
                                   const std::vector<std::string> &tokens,
                                   const LrpConfig &config);

// Forward pass with trace, then relevance of the target class logit
// (predicted class by default) down to the tokens.
RelevanceResult ExplainPrediction(const Model &model, const DocumentMatrix &doc,
                                  const std::vector<std::string> &tokens,
                                  std::optional<int> target_class, const LrpConfig &config);

// Embeds and explains a tokenized document. Throws DataError when empty.
RelevanceResult ExplainPrediction(const Model &model, const EmbeddingTable &table,
                                  const std::vector<std::string> &tokens, int max_len,
                                  std::optional<int> target_class, const LrpConfig &config);

}  // namespace lrptext

#endif  // LRPTEXT_LRP_H_
