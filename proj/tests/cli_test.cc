// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "commands.h"
#include "lrptext/serialize.h"
#include "lrptext/synthetic.h"
#include "test_util.h"

namespace lrptext::cli {
namespace {

using testing::Slurp;
using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome Cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lrptext");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

// One synthetic corpus and trained model shared by the tests below.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    const auto made = Cli({"inspect-data", "--make-synthetic", Path("syn")});
    ASSERT_EQ(made.code, 0) << made.err;
    const auto trained = Cli({"train", "-c", Path("syn/config.json"), "-o", Path("run")});
    ASSERT_EQ(trained.code, 0) << trained.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string Path(const std::string &name) { return (*dir_ / name).string(); }
  static TempDir *dir_;
};

TempDir *CliTest::dir_ = nullptr;

TEST_F(CliTest, TrainWritesAllArtifacts) {
  for (const char *f : {"run/model.lrpm", "run/history.csv", "run/metrics.tsv"}) {
    EXPECT_TRUE(std::filesystem::is_regular_file(Path(f))) << f;
  }
  EXPECT_EQ(Slurp(Path("run/metrics.tsv")).substr(0, 26), "class\tprecision\trecall\tf1\n");
  const std::string history = Slurp(Path("run/history.csv"));
  EXPECT_EQ(history.substr(0, 25), "epoch,loss,val_macro_f1\n1");
  const Model model = LoadModel(Path("run/model.lrpm"));
  EXPECT_EQ(model.class_names.size(), 9u);
  EXPECT_EQ(model.metadata.at("data.max_len"), "64");
}

TEST_F(CliTest, SameSeedGivesIdenticalFiles) {
  const auto again = Cli({"train", "-c", Path("syn/config.json"), "-o", Path("run2")});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(Slurp(Path("run/model.lrpm")), Slurp(Path("run2/model.lrpm")));
  EXPECT_EQ(Slurp(Path("run/metrics.tsv")), Slurp(Path("run2/metrics.tsv")));
  EXPECT_EQ(Slurp(Path("run/history.csv")), Slurp(Path("run2/history.csv")));
}

TEST_F(CliTest, FlagsOverrideConfigAndEnvironment) {
  ASSERT_EQ(setenv(kOutputDirEnv, Path("from_env").c_str(), 1), 0);
  const auto env_run = Cli({"train", "-c", Path("syn/config.json"), "--epochs", "2",
                            "--arch", "cnn"});
  EXPECT_EQ(env_run.code, 0) << env_run.err;
  EXPECT_TRUE(std::filesystem::exists(Path("from_env/model.lrpm")));
  EXPECT_EQ(LoadModel(Path("from_env/model.lrpm")).arch, Architecture::kCnn);
  const std::string history = Slurp(Path("from_env/history.csv"));
  EXPECT_EQ(std::count(history.begin(), history.end(), '\n'), 3);

  const auto flag_run = Cli({"train", "-c", Path("syn/config.json"), "--epochs", "1",
                             "--arch", "cnn", "--set", "model.conv_filters=5", "--set",
                             "train.optimizer=sgd", "-o", Path("from_flag")});
  unsetenv(kOutputDirEnv);
  EXPECT_EQ(flag_run.code, 0) << flag_run.err;
  EXPECT_TRUE(std::filesystem::exists(Path("from_flag/model.lrpm")));
  EXPECT_EQ(LoadModel(Path("from_flag/model.lrpm")).hyper.conv_filters, 5);
  EXPECT_EQ(Cli({"train", "-c", Path("syn/config.json"), "--set", "train.nope=1"}).code,
            kExitConfig);
}

TEST_F(CliTest, ConfigErrorsExitWithCodeTwo) {
  const auto missing = Cli({"train", "-c", Path("syn/config.json"), "--embeddings",
                            Path("nope.vec"), "-o", Path("bad")});
  EXPECT_EQ(missing.code, kExitConfig);
  EXPECT_NE(missing.err.find("embedding.path"), std::string::npos) << missing.err;

  std::ofstream(Path("unknown.json")) << R"({"train": {"epochz": 3}})";
  const auto unknown = Cli({"train", "-c", Path("unknown.json")});
  EXPECT_EQ(unknown.code, kExitConfig);
  EXPECT_NE(unknown.err.find("train.epochz"), std::string::npos) << unknown.err;

  auto config = nlohmann::json::parse(Slurp(Path("syn/config.json")));
  config.erase("seed");
  std::ofstream(Path("noseed.json")) << config.dump();
  const auto noseed = Cli({"train", "-c", Path("noseed.json")});
  EXPECT_EQ(noseed.code, kExitConfig);
  EXPECT_NE(noseed.err.find("seed"), std::string::npos);

  EXPECT_EQ(Cli({"train", "--bogus-flag"}).code, kExitConfig);
}

TEST_F(CliTest, NumericFailureExitsWithCodeFour) {
  const auto blown = Cli({"train", "-c", Path("syn/config.json"), "--optimizer", "sgd",
                          "--learning-rate", "1e300", "--epochs", "3", "-o", Path("nan")});
  EXPECT_EQ(blown.code, kExitNumeric) << blown.err;
}

TEST_F(CliTest, EvaluateReportAndErrors) {
  const auto ok = Cli({"evaluate", "-m", Path("run/model.lrpm"), "-d",
                       Path("syn/corpus.jsonl"), "-o", Path("eval.tsv")});
  ASSERT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out, Slurp(Path("eval.tsv")));
  EXPECT_EQ(ok.out.substr(0, 26), "class\tprecision\trecall\tf1\n");
  EXPECT_NE(ok.out.find("\nmacro\t"), std::string::npos);

  std::ofstream(Path("empty.jsonl")) << "";
  EXPECT_EQ(Cli({"evaluate", "-m", Path("run/model.lrpm"), "-d", Path("empty.jsonl")}).code,
            kExitData);
  std::ofstream(Path("alien.jsonl")) << R"({"id":"1","text":"acid","label":"astronomy"})"
                                     << "\n";
  EXPECT_EQ(Cli({"evaluate", "-m", Path("run/model.lrpm"), "-d", Path("alien.jsonl")}).code,
            kExitData);
}

TEST_F(CliTest, ExplainWritesArtifactsAndReportsResidual) {
  const std::string text =
      "the said alkali method acid system monomer comprising wherein alkyl";
  const auto r = Cli({"explain", "-m", Path("run/model.lrpm"), "-t", text, "-k", "3", "-o",
                      Path("ex")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char *f : {"ex/explanation.html", "ex/explanation.json", "ex/topk.tsv"}) {
    EXPECT_TRUE(std::filesystem::is_regular_file(Path(f))) << f;
  }
  const auto json = nlohmann::json::parse(Slurp(Path("ex/explanation.json")));
  EXPECT_EQ(json["class"], "chemistry");
  const double residual = json["conservation_residual"];
  const double fc = json["f_c"];
  EXPECT_LE(std::abs(residual), 1e-5 * std::abs(fc));
  EXPECT_NE(r.out.find("conservation residual"), std::string::npos);

  const std::string topk = Slurp(Path("ex/topk.tsv"));
  std::istringstream rows(topk.substr(topk.find('\n') + 1));
  std::string rank, token;
  std::getline(rows, rank, '\t');
  std::getline(rows, token, '\t');
  SyntheticCorpus corpus = MakeSyntheticCorpus({});
  EXPECT_TRUE(corpus.IsKeywordOf(token, 2)) << topk;
}

TEST_F(CliTest, ExplainCounterfactualAndEmptyText) {
  const auto r = Cli({"explain", "-m", Path("run/model.lrpm"), "-t", "acid alkyl monomer",
                      "--target", "textiles", "-o", Path("cf")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(Slurp(Path("cf/explanation.html")).find("counterfactual target"),
            std::string::npos);
  EXPECT_EQ(Cli({"explain", "-m", Path("run/model.lrpm"), "-t", " ... ", "-o", Path("e")}).code,
            kExitData);
  EXPECT_EQ(Cli({"explain", "-m", Path("run/model.lrpm"), "-t", "acid", "--target", "nope",
                 "-o", Path("e")})
                .code,
            kExitConfig);
}

TEST_F(CliTest, InspectDataPrintsDistribution) {
  const auto r = Cli({"inspect-data", "-d", Path("syn/corpus.jsonl"), "-o", Path("dist.tsv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("chemistry"), std::string::npos);
  EXPECT_NE(Slurp(Path("dist.tsv")).find("chemistry\t22\t0.1100"), std::string::npos);
}

// Overfit-capable training on a larger synthetic corpus generalizes to a
// freshly sampled one.
TEST(CliHeldOut, EvaluateOnFreshCorpus) {
  TempDir dir("heldout");
  ASSERT_EQ(Cli({"inspect-data", "--make-synthetic", (dir / "big").string(), "--docs", "600"}).code, 0);
  SyntheticOptions fresh;
  fresh.seed = 99;
  WriteJsonl(MakeSyntheticCorpus(fresh).dataset, dir / "fresh.jsonl");
  const auto trained = Cli({"train", "-c", (dir / "big/config.json").string(), "--epochs", "20",
                            "-o", (dir / "run").string()});
  ASSERT_EQ(trained.code, 0) << trained.err;
  const auto eval = Cli({"evaluate", "-m", (dir / "run/model.lrpm").string(), "-d",
                         (dir / "fresh.jsonl").string()});
  ASSERT_EQ(eval.code, 0) << eval.err;
  const auto macro = eval.out.substr(eval.out.find("\nmacro\t") + 7);
  const double f1 = std::stod(macro.substr(macro.rfind('\t', macro.find('\n')) + 1));
  EXPECT_GE(f1, 0.90) << eval.out;
}

}  // namespace
}  // namespace lrptext::cli
