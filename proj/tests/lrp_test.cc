// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "lrptext/errors.h"
#include "lrptext/lrp.h"
#include "test_util.h"

namespace lrptext {
namespace {

using testing::BruteForceMessages;
using testing::PrefixMask;
using testing::RandomMatrix;
using testing::Randomize;
using testing::RelErr;

LrpConfig Config(double eps = 0.001, int delta = 1) {
  LrpConfig c;
  c.epsilon = eps;
  c.delta = delta;
  return c;
}

TEST(LrpDense, HandExample) {
  const Vector x = Vector::Ones(2);
  const Matrix w = (Matrix(2, 1) << 0.5, 0.5).finished();
  const Vector b = Vector::Zero(1);
  const Vector z = Vector::Ones(1);
  const Vector r = Vector::Ones(1);
  const Matrix msg = LrpDenseMessages(x, w, b, z, r, Config());
  // (0.5 + 0.001 / 2) / (1 + 0.001)
  EXPECT_NEAR(msg(0, 0), 0.5005 / 1.001, 1e-15);
  EXPECT_NEAR(msg(1, 0), 0.5, 1e-15);
  EXPECT_NEAR(msg.sum(), 1.0, 1e-15);
  EXPECT_TRUE(LrpDense(x, w, b, z, Vector::Zero(1), Config()).isZero());
}

TEST(LrpDense, MatchesBruteForceAndConserves) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + static_cast<int>(rng.Below(32));
    const int m = 1 + static_cast<int>(rng.Below(32));
    const Matrix w = RandomMatrix(n, m, 100 + trial);
    const Vector x = RandomMatrix(n, 1, 200 + trial);
    const Vector b = RandomMatrix(m, 1, 300 + trial);
    const Vector r = RandomMatrix(m, 1, 400 + trial);
    const Vector z = w.transpose() * x + b;
    for (int delta : {0, 1}) {
      std::vector<std::vector<double>> wv(n, std::vector<double>(m));
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) wv[i][j] = w(i, j);
      }
      const auto ref = BruteForceMessages(std::vector<double>(x.data(), x.data() + n), wv,
                                          std::vector<double>(b.data(), b.data() + m),
                                          std::vector<double>(r.data(), r.data() + m), 0.001,
                                          delta);
      Real leak = 0;
      const Vector got = LrpDense(x, w, b, z, r, Config(0.001, delta), &leak);
      for (int i = 0; i < n; ++i) {
        double row = 0;
        for (int j = 0; j < m; ++j) row += ref[i][j];
        EXPECT_NEAR(got[i], row, 1e-10 * std::max(1.0, std::abs(row)));
      }
      if (delta == 1) {
        EXPECT_NEAR(got.sum(), r.sum(), 1e-10 * std::max(1.0, std::abs(r.sum())));
        EXPECT_EQ(leak, 0.0);
      } else {
        EXPECT_NEAR(got.sum() + leak, r.sum(), 1e-10 * std::max(1.0, std::abs(r.sum())));
      }
    }
  }
}

TEST(LrpDense, ZeroPreActivationUsesPositiveSign) {
  const Vector x = (Vector(2) << 1, -1).finished();
  const Matrix w = Matrix::Ones(2, 1);
  const Vector z = Vector::Zero(1);
  const Vector got = LrpDense(x, w, Vector::Zero(1), z, Vector::Ones(1), Config());
  EXPECT_NEAR(got[0], (1 + 0.0005) / 0.001, 1e-9);
  EXPECT_NEAR(got.sum(), 1.0, 1e-9);
}

TEST(LrpProportional, Examples) {
  const Vector half = LrpProportional((Matrix(2, 1) << 2, 2).finished(), Vector::Ones(1), 1e-12);
  EXPECT_NEAR(half[0], 0.5, 1e-12);
  EXPECT_NEAR(half[1], 0.5, 1e-12);
  const Vector solo = LrpProportional((Matrix(1, 1) << 3).finished(), Vector::Ones(1), 1e-12);
  EXPECT_NEAR(solo[0], 1.0, 1e-12);

  const Matrix w = RandomMatrix(5, 3, 1);
  const Vector x = RandomMatrix(5, 1, 2);
  const Vector r = RandomMatrix(3, 1, 3);
  const Vector z = w.transpose() * x;
  const Matrix contributions = x.asDiagonal() * w;
  const Vector limit = LrpDense(x, w, Vector::Zero(3), z, r, Config(1e-9, 0));
  EXPECT_TRUE(LrpProportional(contributions, r, 1e-9).isApprox(limit, 1e-7));
}

LayerTrace Trace(const Layer &layer, const Matrix &x, const Mask &mask) {
  return ForwardLayer(layer, x, mask);
}

TEST(LrpConv1d, KernelOneEqualsPerPositionDense) {
  Layer conv = MakeConv1d(3, 2, 1, Activation::kRelu);
  Rng rng(1);
  for (auto &t : conv.params) {
    for (auto &v : t.values) v = rng.Uniform(-1, 1);
  }
  const Matrix x = RandomMatrix(4, 3, 2);
  const auto trace = Trace(conv, x, Mask(4, 1));
  const Matrix r_out = RandomMatrix(4, 2, 3);
  RelevanceSinks sinks;
  const Matrix got = LrpConv1d(conv, trace, r_out, Config(), &sinks);
  const Matrix w = conv.param("w").AsMatrix();
  const Vector b = conv.param("b").AsVector();
  for (int t = 0; t < 4; ++t) {
    const Vector ref = LrpDense(x.row(t).transpose(), w, b, trace.pre.row(t).transpose(),
                                r_out.row(t).transpose(), Config());
    EXPECT_TRUE(got.row(t).transpose().isApprox(ref, 1e-13));
  }
  EXPECT_EQ(sinks.boundary, 0.0);
}

TEST(LrpConv1d, ConservesWithBoundarySink) {
  Layer conv = MakeConv1d(3, 4, 3, Activation::kRelu);
  Rng rng(4);
  for (auto &t : conv.params) {
    for (auto &v : t.values) v = rng.Uniform(-1, 1);
  }
  const Mask mask = PrefixMask(6, 5);
  const auto trace = Trace(conv, RandomMatrix(6, 3, 5), mask);
  Matrix r_out = RandomMatrix(6, 4, 6);
  r_out.row(5).setZero();
  RelevanceSinks sinks;
  const Matrix got = LrpConv1d(conv, trace, r_out, Config(), &sinks);
  EXPECT_NE(sinks.boundary, 0.0);
  EXPECT_TRUE(got.row(5).isZero());
  EXPECT_LT(RelErr(got.sum() + sinks.boundary, r_out.sum()), 1e-8);
}

TEST(LrpPool, SharesAndConservation) {
  const Layer pool = MakeGlobalAvgPool(1);
  const auto equal = Trace(pool, Matrix::Constant(3, 1, 2.0), Mask(3, 1));
  const Matrix r = LrpGlobalAvgPool(equal, Vector::Ones(1), Config());
  EXPECT_NEAR(r(0, 0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(r(2, 0), 1.0 / 3, 1e-15);

  const Matrix x = (Matrix(3, 1) << 1, 0, 2).finished();
  const auto trace = Trace(pool, x, Mask(3, 1));
  const Matrix s = LrpGlobalAvgPool(trace, Vector::Ones(1), Config());
  const double eps = 0.001;
  EXPECT_NEAR(s(1, 0), (eps / 3) / (1.0 + eps), 1e-15);
  EXPECT_NEAR(s.sum(), 1.0, 1e-15);
}

TEST(LrpRecurrent, SaturatedGatesSendRelevanceToInput) {
  Layer lstm = MakeLstm(2, 1, false);
  Rng rng(7);
  for (auto &v : lstm.param("fw_wx").values) v = rng.Uniform(0.5, 1);
  auto &b = lstm.param("fw_b").values;  // [i f g o]
  b = {50, -50, 0, 50};
  const Matrix x = (Matrix(1, 2) << 0.4, 0.3).finished();
  const auto trace = Trace(lstm, x, Mask(1, 1));
  RelevanceSinks sinks;
  Real gates = 0;
  const Matrix r_in = LrpRecurrent(lstm, trace, Matrix::Ones(1, 1), Config(), &sinks, &gates);
  EXPECT_EQ(gates, 0.0);
  EXPECT_GT(r_in.sum(), 0.99);
  EXPECT_NEAR(r_in.sum() + sinks.initial_state, 1.0, 1e-12);
}

TEST(LrpRecurrent, ConservationAndZeroInjection) {
  Layer bi = MakeBiLstm(3, 4, true);
  Rng rng(8);
  for (auto &t : bi.params) {
    for (auto &v : t.values) v = rng.Uniform(-1, 1);
  }
  const Mask mask = PrefixMask(7, 5);
  const auto trace = Trace(bi, RandomMatrix(7, 3, 9), mask);
  Matrix r_out = RandomMatrix(7, 8, 10);
  r_out.bottomRows(2).setZero();
  RelevanceSinks sinks;
  Real gates = 0;
  const Matrix r_in = LrpRecurrent(bi, trace, r_out, Config(), &sinks, &gates);
  EXPECT_LT(RelErr(r_in.sum() + sinks.Total(), r_out.sum()), 1e-6);
  EXPECT_TRUE(r_in.bottomRows(2).isZero());
  EXPECT_EQ(gates, 0.0);

  RelevanceSinks none;
  EXPECT_TRUE(LrpRecurrent(bi, trace, Matrix::Zero(7, 8), Config(), &none, &gates).isZero());
  EXPECT_EQ(none.Total(), 0.0);
}

TEST(LrpEmbedding, RowSumsOverUnmaskedPositions) {
  Matrix r(3, 3);
  r << 0.1, -0.02, 0.05, 0, 0, 0, 9, 9, 9;
  const auto tokens = LrpEmbedding(r, Mask{1, 1, 0}, {"a", "b"});
  ASSERT_EQ(tokens.size(), 2u);
  EXPECT_NEAR(tokens[0].relevance, 0.13, 1e-15);
  EXPECT_EQ(tokens[1].relevance, 0.0);
  EXPECT_EQ(tokens[1].token, "b");
}

Model RandomModel(Architecture arch, int d, std::uint64_t seed) {
  Model m = BuildModel(arch, d, 3, ModelHyper{4, 3, 5, 6, 3}, seed);
  Randomize(m, seed + 1);
  return m;
}

DocumentMatrix RandomDoc(int T, int d, int real, std::uint64_t seed) {
  DocumentMatrix doc{RandomMatrix(T, d, seed), PrefixMask(T, real)};
  doc.values.bottomRows(T - real).setZero();
  return doc;
}

std::vector<std::string> Names(int n) {
  std::vector<std::string> t;
  for (int i = 0; i < n; ++i) t.push_back("t" + std::to_string(i));
  return t;
}

TEST(ExplainPrediction, EndToEndConservationAndDeterminism) {
  for (auto arch : {Architecture::kBiLstm, Architecture::kCnn, Architecture::kCnnBiLstm}) {
    const Model m = RandomModel(arch, 4, 3);
    const auto doc = RandomDoc(8, 4, 6, 4);
    const auto r = ExplainPrediction(m, doc, Names(6), std::nullopt, Config());
    EXPECT_EQ(r.target_class, r.prediction.predicted_class);
    EXPECT_DOUBLE_EQ(r.target_score, r.prediction.score);
    EXPECT_LT(std::abs(r.RelativeResidual()), 1e-5);
    EXPECT_NEAR(r.TokenTotal() + r.sinks.Total(), r.target_score,
                1e-5 * std::abs(r.target_score));
    ASSERT_EQ(r.tokens.size(), 6u);
    const auto again = ExplainPrediction(m, doc, Names(6), std::nullopt, Config());
    for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(r.tokens[t].relevance, again.tokens[t].relevance);
    for (const auto &layer : r.layers) {
      if (layer.kind != LayerKind::kLstm && layer.kind != LayerKind::kBiLstm) {
        EXPECT_LT(layer.RelativeConservationError(), 1e-8) << LayerKindName(layer.kind);
      }
    }
  }
}

TEST(ExplainPrediction, BiasLeakWithDeltaZero) {
  const Model m = RandomModel(Architecture::kCnn, 4, 11);
  const auto doc = RandomDoc(6, 4, 6, 12);
  const auto r = ExplainPrediction(m, doc, Names(6), std::nullopt, Config(0.001, 0));
  EXPECT_NE(r.sinks.bias, 0.0);
  EXPECT_LT(std::abs(r.RelativeResidual()), 1e-5);
}

TEST(ExplainPrediction, ZeroLogitTargetHasZeroBudget) {
  Model m = RandomModel(Architecture::kCnn, 4, 13);
  auto &last = m.layers.back();
  const int units = last.units;
  for (int i = 0; i < last.input_dim; ++i) last.param("w").values[i * units + 2] = 0;
  last.param("b").values[2] = 0;
  const auto r = ExplainPrediction(m, RandomDoc(5, 4, 5, 14), Names(5), 2, Config());
  EXPECT_EQ(r.target_score, 0.0);
  EXPECT_NEAR(r.TokenTotal() + r.sinks.Total(), 0.0, 1e-12);
}

TEST(ExplainPrediction, LinearInStartRelevance) {
  const Model m = RandomModel(Architecture::kCnnBiLstm, 4, 15);
  const auto doc = RandomDoc(6, 4, 6, 16);
  const auto fwd = ForwardModel(m, doc);
  Vector start = Vector::Zero(3);
  start[1] = fwd.prediction.logits[1];
  const auto base = PropagateRelevance(m, fwd, start, doc.mask, Names(6), Config());
  const auto scaled = PropagateRelevance(m, fwd, 3.5 * start, doc.mask, Names(6), Config());
  for (int t = 0; t < 6; ++t) {
    EXPECT_NEAR(scaled.tokens[t].relevance, 3.5 * base.tokens[t].relevance,
                1e-12 * std::max(1.0, std::abs(base.tokens[t].relevance)));
  }
}

TEST(ExplainPrediction, RejectsEmptyDocumentsAndBadConfig) {
  const Model m = RandomModel(Architecture::kCnn, 4, 17);
  const EmbeddingTable table(4);
  EXPECT_THROW(ExplainPrediction(m, table, {}, 8, std::nullopt, Config()), DataError);
  EXPECT_THROW(Config(0.0, 1).Validate(), ConfigError);
  EXPECT_THROW(Config(0.001, 2).Validate(), ConfigError);
}

}  // namespace
}  // namespace lrptext
