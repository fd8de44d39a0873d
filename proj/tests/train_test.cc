// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "gradcheck.h"
#include "lrptext/errors.h"
#include "lrptext/synthetic.h"
#include "lrptext/train.h"
#include "test_util.h"

namespace lrptext {
namespace {

using testing::CheckGradients;
using testing::PrefixMask;
using testing::RandomMatrix;
using testing::Randomize;

Example MakeExample(int T, int d, int real, int label, std::uint64_t seed) {
  Example ex;
  ex.doc.values = RandomMatrix(T, d, seed);
  ex.doc.mask = PrefixMask(T, real);
  ex.doc.values.bottomRows(T - real).setZero();
  ex.label = label;
  return ex;
}

std::vector<Example> ToyBatch(int d, int K) {
  return {MakeExample(3, d, 3, 0, 1), MakeExample(3, d, 2, 1 % K, 2),
          MakeExample(3, d, 3, 1 % K, 3)};
}

TEST(CrossEntropy, AnalyticValues) {
  EXPECT_DOUBLE_EQ(CrossEntropyLoss((Vector(2) << 1, 0).finished(), 0), 0.0);
  EXPECT_NEAR(CrossEntropyLoss(Vector::Constant(9, 1.0 / 9), 4), 2.1972245773, 1e-9);
  EXPECT_DOUBLE_EQ(CrossEntropyLoss((Vector(2) << 0.5, 0.5).finished(), 1, 2.0),
                   2 * std::log(2.0));
}

class GradientCheck : public ::testing::TestWithParam<Architecture> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  Model model = BuildModel(GetParam(), 4, 2, ModelHyper{3, 2, 3, 3, 3}, 17);
  Randomize(model, 18);
  const auto r = CheckGradients(model, ToyBatch(4, 2));
  EXPECT_LT(r.max_rel_error, 1e-5) << "worst " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, GradientCheck,
                         ::testing::Values(Architecture::kBiLstm, Architecture::kCnn,
                                           Architecture::kCnnBiLstm));

TEST(GradientCheck, SingleDirectionLstmAndTanhDense) {
  Model model;
  model.arch = Architecture::kBiLstm;
  model.input_dim = 4;
  model.num_classes = 2;
  model.layers = {MakeLstm(4, 3, true), MakeGlobalAvgPool(3),
                  MakeDense(3, 3, Activation::kTanh), MakeDense(3, 3, Activation::kSigmoid),
                  MakeDense(3, 2, Activation::kSoftmax)};
  Randomize(model, 4);
  const auto r = CheckGradients(model, ToyBatch(4, 2));
  EXPECT_LT(r.max_rel_error, 1e-5) << "worst " << r.worst;
}

TEST(TrainStep, ZeroLearningRateLeavesParameters) {
  for (auto opt : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    Model model = BuildModel(Architecture::kCnn, 4, 2, ModelHyper{3, 2, 3, 3, 3}, 1);
    const Model before = model;
    TrainConfig config;
    config.learning_rate = 0;
    config.optimizer = opt;
    Trainer trainer(model, config);
    const auto batch = ToyBatch(4, 2);
    std::vector<const Example *> ptrs{&batch[0], &batch[1]};
    trainer.TrainStep(ptrs);
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      for (std::size_t p = 0; p < model.layers[l].params.size(); ++p) {
        EXPECT_EQ(model.layers[l].params[p].values, before.layers[l].params[p].values);
      }
    }
  }
}

TEST(TrainStep, DuplicateSampleEqualsDoubleWeight) {
  Model a = BuildModel(Architecture::kBiLstm, 4, 2, ModelHyper{3, 2, 3, 3, 3}, 8);
  Randomize(a, 9);
  Model b = a;
  TrainConfig config;
  config.optimizer = OptimizerKind::kSgd;
  config.learning_rate = 0.1;
  config.batch_size = 2;
  const Example x = MakeExample(3, 4, 3, 1, 5);
  Example heavy = x;
  heavy.weight = 2;
  Trainer ta(a, config), tb(b, config);
  const Example *dup[] = {&x, &x};
  const Example *one[] = {&heavy};
  const Real la = ta.TrainStep(dup);
  const Real lb = tb.TrainStep(one);
  EXPECT_NEAR(la, lb, 1e-14);
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (std::size_t p = 0; p < a.layers[l].params.size(); ++p) {
      const auto &va = a.layers[l].params[p].values;
      const auto &vb = b.layers[l].params[p].values;
      for (std::size_t i = 0; i < va.size(); ++i) EXPECT_NEAR(va[i], vb[i], 1e-14);
    }
  }
}

TEST(TrainStep, NonFiniteInputRaisesNumericError) {
  Model model = BuildModel(Architecture::kCnn, 4, 2, ModelHyper{3, 2, 3, 3, 3}, 1);
  Example ex = MakeExample(3, 4, 3, 0, 1);
  ex.doc.values(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Trainer trainer(model, TrainConfig{});
  const Example *batch[] = {&ex};
  EXPECT_THROW(trainer.TrainStep(batch), NumericError);
}

std::vector<Example> SyntheticExamples(int docs, std::uint64_t seed) {
  SyntheticOptions options;
  options.num_documents = docs;
  options.seed = seed;
  const auto corpus = MakeSyntheticCorpus(options);
  return EncodeDataset(corpus.dataset, corpus.embeddings, 20);
}

TEST(Train, PatienceZeroRunsEveryEpochAndIsDeterministic) {
  const auto data = SyntheticExamples(36, 2);
  TrainConfig config;
  config.epochs = 4;
  config.batch_size = 8;
  config.patience = 0;
  config.seed = 3;
  Model a = BuildModel(Architecture::kCnn, 16, 9, ModelHyper{4, 4, 8, 8, 3}, 1);
  Model b = a;
  const auto ha = Train(a, data, &data, config);
  const auto hb = Train(b, data, &data, config);
  ASSERT_EQ(ha.history.size(), 4u);
  EXPECT_FALSE(ha.stopped_early);
  EXPECT_EQ(HistoryCsv(ha.history), HistoryCsv(hb.history));
  EXPECT_EQ(a.layers[0].params[0].values, b.layers[0].params[0].values);
}

TEST(Train, EarlyStoppingRestoresBestEpoch) {
  const auto data = SyntheticExamples(36, 4);
  TrainConfig config;
  config.epochs = 40;
  config.batch_size = 8;
  config.learning_rate = 0.05;
  config.patience = 2;
  config.seed = 1;
  Model model = BuildModel(Architecture::kCnn, 16, 9, ModelHyper{4, 4, 8, 8, 3}, 1);
  const auto result = Train(model, data, &data, config);
  ASSERT_TRUE(result.stopped_early);
  double best = -1;
  for (const auto &e : result.history) best = std::max(best, e.val_macro_f1);
  EXPECT_DOUBLE_EQ(result.history[result.best_epoch - 1].val_macro_f1, best);
  EXPECT_DOUBLE_EQ(Evaluate(model, data).macro_f1, best);
}

TEST(Train, SmallStepLossMostlyDecreasesOnFixedBatch) {
  const auto data = SyntheticExamples(9, 6);
  TrainConfig config;
  config.epochs = 60;
  config.batch_size = 9;
  config.optimizer = OptimizerKind::kSgd;
  config.learning_rate = 0.05;
  config.patience = 0;
  Model model = BuildModel(Architecture::kBiLstm, 16, 9, ModelHyper{4, 4, 8, 8, 3}, 2);
  const auto result = Train(model, data, nullptr, config);
  int increases = 0;
  for (std::size_t e = 1; e < result.history.size(); ++e) {
    if (result.history[e].loss > result.history[e - 1].loss) ++increases;
  }
  EXPECT_LE(increases, 3) << "of " << result.history.size() - 1;
  EXPECT_LT(result.history.back().loss, result.history.front().loss);
}

TEST(Train, ValidatesConfigAndLabels) {
  TrainConfig config;
  config.batch_size = 0;
  EXPECT_THROW(config.Validate(2), ConfigError);
  const Model model = BuildModel(Architecture::kCnn, 4, 2, ModelHyper{3, 2, 3, 3, 3}, 1);
  EXPECT_THROW(CheckLabelCompatibility(model, LabelMap({"a", "b", "c"})), DataError);
}

TEST(Metrics, HandConfusionMatrix) {
  const std::vector<int> gold{0, 0, 1, 1}, pred{0, 1, 1, 1};
  const Metrics m = ComputeMetrics(gold, pred, 2);
  EXPECT_DOUBLE_EQ(m.per_class[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(m.per_class[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(m.per_class[0].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.per_class[1].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.per_class[1].recall, 1.0);
  EXPECT_EQ(m.confusion, (std::vector<std::vector<std::size_t>>{{1, 1}, {0, 2}}));
}

TEST(Metrics, PerfectAndEmpty) {
  const std::vector<int> y{0, 1, 2, 2};
  const Metrics m = ComputeMetrics(y, y, 3);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_FALSE(m.AnyUndefined());
  EXPECT_THROW(ComputeMetrics(std::vector<int>{}, std::vector<int>{}, 2), DataError);
}

TEST(Metrics, ConfusionMatchesPerSampleTally) {
  Rng rng(5);
  std::vector<int> gold(200), pred(200);
  for (int i = 0; i < 200; ++i) {
    gold[i] = static_cast<int>(rng.Below(4));
    pred[i] = static_cast<int>(rng.Below(4));
  }
  const Metrics m = ComputeMetrics(gold, pred, 4);
  for (int k = 0; k < 4; ++k) {
    int tp = 0, fp = 0, fn = 0;
    for (int i = 0; i < 200; ++i) {
      tp += gold[i] == k && pred[i] == k;
      fp += gold[i] != k && pred[i] == k;
      fn += gold[i] == k && pred[i] != k;
    }
    EXPECT_DOUBLE_EQ(m.per_class[k].precision, tp / double(tp + fp));
    EXPECT_DOUBLE_EQ(m.per_class[k].recall, tp / double(tp + fn));
  }
}

TEST(Metrics, TsvSchema) {
  const std::vector<int> gold{0, 1}, pred{0, 0};
  const std::string tsv = MetricsTsv(ComputeMetrics(gold, pred, 2), {"x", "y"});
  EXPECT_EQ(tsv,
            "class\tprecision\trecall\tf1\n"
            "x\t0.5000\t1.0000\t0.6667\n"
            "y\t0.0000\t0.0000\t0.0000\n"
            "macro\t0.2500\t0.5000\t0.3333\n");
}

}  // namespace
}  // namespace lrptext
