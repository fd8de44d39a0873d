// SPDX-License-Identifier: Apache-2.0

#include "commands.h"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "lrptext/errors.h"
#include "lrptext/serialize.h"

namespace lrptext::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char *kModelFile = "model.lrpm";
constexpr const char *kHistoryFile = "history.csv";
constexpr const char *kMetricsFile = "metrics.tsv";

LoadOptions MakeLoadOptions(const DataConfig &data, const fs::path &path,
                            const LabelMap *labels) {
  LoadOptions options;
  options.format = ResolveFormat(data.format, path);
  options.text_field = data.text_field;
  options.label_field = data.label_field;
  options.id_field = data.id_field;
  options.fixed_labels = labels;
  return options;
}

// Embedding source recorded in (or overriding) a model file.
EmbeddingConfig EmbeddingFromModel(const Model &model,
                                   const std::optional<EmbeddingConfig> &override_config) {
  if (override_config && (!override_config->path.empty() || override_config->synthetic_dim > 0)) {
    return *override_config;
  }
  EmbeddingConfig config;
  if (auto it = model.metadata.find("embedding.path"); it != model.metadata.end()) {
    config.path = it->second;
  }
  if (auto it = model.metadata.find("embedding.synthetic_dim"); it != model.metadata.end()) {
    config.synthetic_dim = std::stoi(it->second);
  }
  if (config.path.empty() && config.synthetic_dim <= 0) {
    throw ConfigError("embedding: model file does not record an embedding source; pass "
                      "--embeddings or --synthetic-dim");
  }
  if (!config.path.empty() && !fs::is_regular_file(config.path)) {
    throw ConfigError("embedding.path: file not found: " + config.path);
  }
  return config;
}

int ModelMaxLen(const Model &model, std::optional<int> override_len) {
  if (override_len) return *override_len;
  if (auto it = model.metadata.find("data.max_len"); it != model.metadata.end()) {
    return std::stoi(it->second);
  }
  return 256;
}

std::vector<std::string> ClassNames(const Model &model) {
  if (!model.class_names.empty()) return model.class_names;
  std::vector<std::string> names;
  for (int k = 0; k < model.num_classes; ++k) names.push_back(std::to_string(k));
  return names;
}

int ResolveTarget(const Model &model, const std::string &target) {
  const auto names = ClassNames(model);
  for (int k = 0; k < static_cast<int>(names.size()); ++k) {
    if (names[k] == target) return k;
  }
  int index = -1;
  std::istringstream in(target);
  if (in >> index && in.eof() && index >= 0 && index < model.num_classes) return index;
  throw ConfigError("target: unknown class '" + target + "'");
}

std::string ReadFile(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// "a.b=v" as {"a": {"b": v}}. The value is read as JSON when it parses,
// otherwise as a string.
std::string AssignmentJson(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("--set: expected KEY=VALUE, got '" + assignment + "'");
  }
  const std::string value_text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;
  nlohmann::json root = nlohmann::json::object();
  nlohmann::json *node = &root;
  std::string_view key(assignment.data(), eq);
  for (;;) {
    const auto dot = key.find('.');
    if (dot == std::string_view::npos) {
      (*node)[std::string(key)] = value;
      break;
    }
    node = &(*node)[std::string(key.substr(0, dot))];
    key.remove_prefix(dot + 1);
  }
  return root.dump();
}

}  // namespace

EmbeddingTable LoadEmbeddings(const EmbeddingConfig &config) {
  if (!config.path.empty()) return EmbeddingTable::LoadVec(config.path);
  if (config.synthetic_dim > 0) return EmbeddingTable(config.synthetic_dim);
  throw ConfigError("embedding: set embedding.path or embedding.synthetic_dim");
}

TrainOutputs CmdTrain(const RunConfig &config) {
  config.ValidateForTraining();
  const EmbeddingTable table = LoadEmbeddings(config.embedding);

  Dataset train_set = LoadDataset(config.data.train,
                                  MakeLoadOptions(config.data, config.data.train, nullptr));
  const LabelMap labels = train_set.label_map;
  if (labels.size() < 2) throw DataError("training data needs at least 2 classes");
  if (!config.train.class_weights.empty() &&
      static_cast<int>(config.train.class_weights.size()) != labels.size()) {
    throw ConfigError("train.class_weights: expected " + std::to_string(labels.size()) +
                      " entries");
  }

  Dataset held_out;
  if (!config.data.valid.empty()) {
    held_out = LoadDataset(config.data.valid,
                           MakeLoadOptions(config.data, config.data.valid, &labels));
  } else {
    auto halves = SplitDataset(train_set, config.data.train_fraction, *config.seed);
    train_set = std::move(halves.first);
    held_out = std::move(halves.second);
  }
  Dataset test_set = held_out;
  if (!config.data.test.empty()) {
    test_set = LoadDataset(config.data.test, MakeLoadOptions(config.data, config.data.test, &labels));
  }

  const int max_len = config.data.max_len;
  const auto train_examples = EncodeDataset(train_set, table, max_len);
  const auto valid_examples = EncodeDataset(held_out, table, max_len);
  const auto test_examples = EncodeDataset(test_set, table, max_len);

  Model model = BuildModel(config.arch, table.dim(), labels.size(), config.hyper, *config.seed);
  model.class_names = labels.names();
  if (!config.embedding.path.empty()) {
    model.metadata["embedding.path"] = fs::absolute(config.embedding.path).lexically_normal().string();
  } else {
    model.metadata["embedding.synthetic_dim"] = std::to_string(config.embedding.synthetic_dim);
  }
  model.metadata["data.max_len"] = std::to_string(max_len);

  TrainConfig train_config = config.train;
  train_config.seed = *config.seed;
  spdlog::info("training {} on {} documents ({} held out), {} parameters",
               ArchitectureName(config.arch), train_examples.size(), valid_examples.size(),
               model.NumParameters());

  TrainOutputs outputs;
  outputs.result = Train(model, train_examples, &valid_examples, train_config);
  outputs.metrics = Evaluate(model, test_examples);

  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  outputs.model_path = dir / kModelFile;
  outputs.history_path = dir / kHistoryFile;
  outputs.metrics_path = dir / kMetricsFile;
  SaveModel(model, outputs.model_path);
  WriteTextFile(outputs.history_path, HistoryCsv(outputs.result.history));
  WriteTextFile(outputs.metrics_path, MetricsTsv(outputs.metrics, model.class_names));
  return outputs;
}

Metrics CmdEvaluate(const EvaluateOptions &options, std::string *report) {
  const Model model = LoadModel(options.model_path);
  const EmbeddingTable table = LoadEmbeddings(EmbeddingFromModel(model, options.embedding));
  if (table.dim() != model.input_dim) {
    throw DataError("embedding dimension " + std::to_string(table.dim()) +
                    " does not match the model's " + std::to_string(model.input_dim));
  }
  const LabelMap labels(ClassNames(model));
  const LabelMap *fixed = model.class_names.empty() ? nullptr : &labels;
  const Dataset dataset =
      LoadDataset(options.data_path, MakeLoadOptions(options.data, options.data_path, fixed));
  CheckLabelCompatibility(model, dataset.label_map);

  const auto examples = EncodeDataset(dataset, table, ModelMaxLen(model, std::nullopt));
  const Metrics metrics = Evaluate(model, examples);
  const std::string tsv = MetricsTsv(metrics, ClassNames(model));
  if (!options.report_path.empty()) WriteTextFile(options.report_path, tsv);
  if (report != nullptr) *report = tsv;
  return metrics;
}

ExplainOutputs CmdExplain(const ExplainOptions &options) {
  options.lrp.Validate();
  if (options.top_k < 1) throw ConfigError("k: must be at least 1");
  const auto tokens = Tokenize(options.text);
  if (tokens.empty()) throw DataError("input text is empty after tokenization");

  const Model model = LoadModel(options.model_path);
  const EmbeddingTable table = LoadEmbeddings(EmbeddingFromModel(model, options.embedding));
  if (table.dim() != model.input_dim) {
    throw DataError("embedding dimension " + std::to_string(table.dim()) +
                    " does not match the model's " + std::to_string(model.input_dim));
  }
  std::optional<int> target;
  if (options.target_class) target = ResolveTarget(model, *options.target_class);

  ExplainOutputs outputs;
  outputs.relevance = ExplainPrediction(model, table, tokens, ModelMaxLen(model, options.max_len),
                                        target, options.lrp);
  outputs.explanation = MakeExplanation(options.doc_id, outputs.relevance, ClassNames(model));
  outputs.top_words = TopKWords(outputs.explanation, options.top_k);

  fs::create_directories(options.output_dir);
  outputs.html_path = options.output_dir / "explanation.html";
  outputs.json_path = options.output_dir / "explanation.json";
  outputs.topk_path = options.output_dir / "topk.tsv";
  WriteTextFile(outputs.html_path, RenderHtml(outputs.explanation, options.html));
  WriteTextFile(outputs.json_path, RenderJson(outputs.explanation));
  WriteTextFile(outputs.topk_path, TopKTsv(outputs.top_words));
  return outputs;
}

InspectOutputs CmdInspectData(const fs::path &data_path, const DataConfig &data,
                              const fs::path &report_path) {
  const Dataset dataset = LoadDataset(data_path, MakeLoadOptions(data, data_path, nullptr));
  InspectOutputs outputs{DistributionTable(dataset), DistributionTsv(dataset)};
  if (!report_path.empty()) WriteTextFile(report_path, outputs.tsv);
  return outputs;
}

void MakeSyntheticData(const SyntheticOptions &options, const fs::path &directory) {
  const SyntheticCorpus corpus = MakeSyntheticCorpus(options);
  fs::create_directories(directory);
  WriteJsonl(corpus.dataset, directory / "corpus.jsonl");
  WriteVec(corpus, directory / "embeddings.vec");
  nlohmann::json config{
      {"data", {{"train", (directory / "corpus.jsonl").string()}, {"max_len", 64}}},
      {"embedding", {{"path", (directory / "embeddings.vec").string()}}},
      {"model",
       {{"arch", "bilstm"},
        {"lstm_units_1", 8},
        {"lstm_units_2", 8},
        {"dense_units", 16},
        {"conv_filters", 16},
        {"kernel_size", 3}}},
      {"train",
       {{"epochs", 50}, {"batch_size", 16}, {"learning_rate", 0.01}, {"patience", 0}}},
      {"lrp", {{"epsilon", 0.001}, {"delta", 1}}},
      {"output_dir", (directory / "run").string()},
      {"seed", options.seed}};
  WriteTextFile(directory / "config.json", config.dump(2) + "\n");
}

int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Explainable text classification with layer-wise relevance propagation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lrptext 0.1.0");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  // train
  auto *train = app.add_subcommand("train", "Train a model and write model, history and metrics");
  std::string config_path;
  std::string train_path, valid_path, test_path, format, embeddings, arch, optimizer, output_dir;
  int synthetic_dim = 0, epochs = 0, batch_size = 0, patience = 0, max_len = 0;
  double learning_rate = 0;
  std::uint64_t seed = 0;
  train->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto *o_train = train->add_option("--train", train_path, "Training data (csv or jsonl)");
  auto *o_valid = train->add_option("--valid", valid_path, "Validation data");
  auto *o_test = train->add_option("--test", test_path, "Test data for the metrics report");
  auto *o_format = train->add_option("--format", format, "auto, csv or jsonl");
  auto *o_emb = train->add_option("--embeddings", embeddings, "Embedding .vec file");
  auto *o_synth = train->add_option("--synthetic-dim", synthetic_dim,
                                    "Use hashed subword vectors of this dimension");
  auto *o_arch = train->add_option("--arch", arch, "bilstm, cnn or cnn_bilstm");
  auto *o_epochs = train->add_option("--epochs", epochs);
  auto *o_batch = train->add_option("--batch-size", batch_size);
  auto *o_lr = train->add_option("--learning-rate", learning_rate);
  auto *o_opt = train->add_option("--optimizer", optimizer, "sgd or adam");
  auto *o_patience = train->add_option("--patience", patience, "0 disables early stopping");
  auto *o_maxlen = train->add_option("--max-len", max_len);
  auto *o_out = train->add_option("-o,--output-dir", output_dir);
  auto *o_seed = train->add_option("--seed", seed);
  std::string text_field, label_field;
  ModelHyper hyper;
  std::vector<std::string> assignments;
  auto *o_text_field = train->add_option("--text-field", text_field);
  auto *o_label_field = train->add_option("--label-field", label_field);
  auto *o_units1 = train->add_option("--lstm-units-1", hyper.lstm_units_1);
  auto *o_units2 = train->add_option("--lstm-units-2", hyper.lstm_units_2);
  auto *o_dense = train->add_option("--dense-units", hyper.dense_units);
  auto *o_filters = train->add_option("--conv-filters", hyper.conv_filters);
  auto *o_kernel = train->add_option("--kernel-size", hyper.kernel_size);
  train->add_option("--set", assignments,
                    "Override any config field, e.g. --set train.beta2=0.99 (repeatable)");

  // evaluate
  auto *evaluate = app.add_subcommand("evaluate", "Score a dataset with a trained model");
  EvaluateOptions eval_options;
  std::string eval_model, eval_data, eval_report, eval_format = "auto", eval_emb;
  int eval_synth = 0;
  evaluate->add_option("-m,--model", eval_model)->required()->check(CLI::ExistingFile);
  evaluate->add_option("-d,--data", eval_data)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--format", eval_format);
  evaluate->add_option("--text-field", eval_options.data.text_field);
  evaluate->add_option("--label-field", eval_options.data.label_field);
  evaluate->add_option("--embeddings", eval_emb);
  evaluate->add_option("--synthetic-dim", eval_synth);
  evaluate->add_option("-o,--output", eval_report, "Write the TSV report here");

  // explain
  auto *explain = app.add_subcommand("explain", "Explain one prediction");
  ExplainOptions ex;
  std::string ex_model, ex_text, ex_input, ex_target, ex_emb, ex_out;
  int ex_synth = 0, ex_maxlen = 0;
  explain->add_option("-m,--model", ex_model)->required()->check(CLI::ExistingFile);
  auto *o_text = explain->add_option("-t,--text", ex_text, "Document text");
  auto *o_input = explain->add_option("-i,--input", ex_input, "File holding the document text")
                      ->check(CLI::ExistingFile);
  o_text->excludes(o_input);
  auto *o_target = explain->add_option("--target", ex_target, "Class name or index to explain");
  explain->add_option("-k,--top-k", ex.top_k);
  explain->add_option("--epsilon", ex.lrp.epsilon);
  explain->add_option("--delta", ex.lrp.delta);
  explain->add_option("--doc-id", ex.doc_id);
  explain->add_flag("--show-negative", ex.html.show_negative, "Shade negative relevance blue");
  explain->add_option("--embeddings", ex_emb);
  explain->add_option("--synthetic-dim", ex_synth);
  auto *o_ex_maxlen = explain->add_option("--max-len", ex_maxlen);
  auto *o_ex_out = explain->add_option("-o,--output-dir", ex_out);

  // inspect-data
  auto *inspect = app.add_subcommand("inspect-data", "Class distribution or synthetic corpus");
  std::string in_data, in_format = "auto", in_report, synth_dir;
  DataConfig in_config;
  SyntheticOptions synth;
  auto *o_in_data = inspect->add_option("-d,--data", in_data)->check(CLI::ExistingFile);
  inspect->add_option("--format", in_format);
  inspect->add_option("--text-field", in_config.text_field);
  inspect->add_option("--label-field", in_config.label_field);
  inspect->add_option("-o,--output", in_report, "Write the TSV report here");
  auto *o_make = inspect->add_option("--make-synthetic", synth_dir,
                                     "Write a synthetic keyword corpus into this directory");
  o_make->excludes(o_in_data);
  inspect->add_option("--classes", synth.num_classes);
  inspect->add_option("--docs", synth.num_documents);
  inspect->add_option("--tokens", synth.tokens_per_document);
  inspect->add_option("--dim", synth.embedding_dim);
  inspect->add_option("--seed", synth.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  auto env_output_dir = []() -> std::optional<std::string> {
    if (const char *v = std::getenv(kOutputDirEnv); v != nullptr && *v != '\0') return v;
    return std::nullopt;
  };

  try {
    if (train->parsed()) {
      RunConfig config = config_path.empty() ? RunConfig{} : RunConfig::FromFile(config_path);
      if (auto env = env_output_dir()) config.output_dir = *env;
      for (const auto &assignment : assignments) config.MergeJson(AssignmentJson(assignment));
      if (o_train->count()) config.data.train = train_path;
      if (o_valid->count()) config.data.valid = valid_path;
      if (o_test->count()) config.data.test = test_path;
      if (o_format->count()) config.data.format = format;
      if (o_emb->count()) config.embedding.path = embeddings;
      if (o_synth->count()) {
        config.embedding.synthetic_dim = synthetic_dim;
        if (!o_emb->count()) config.embedding.path.clear();
      }
      if (o_arch->count()) config.arch = ParseArchitecture(arch);
      if (o_epochs->count()) config.train.epochs = epochs;
      if (o_batch->count()) config.train.batch_size = batch_size;
      if (o_lr->count()) config.train.learning_rate = learning_rate;
      if (o_opt->count()) config.train.optimizer = ParseOptimizer(optimizer);
      if (o_patience->count()) config.train.patience = patience;
      if (o_maxlen->count()) config.data.max_len = max_len;
      if (o_out->count()) config.output_dir = output_dir;
      if (o_seed->count()) config.seed = seed;
      if (o_text_field->count()) config.data.text_field = text_field;
      if (o_label_field->count()) config.data.label_field = label_field;
      if (o_units1->count()) config.hyper.lstm_units_1 = hyper.lstm_units_1;
      if (o_units2->count()) config.hyper.lstm_units_2 = hyper.lstm_units_2;
      if (o_dense->count()) config.hyper.dense_units = hyper.dense_units;
      if (o_filters->count()) config.hyper.conv_filters = hyper.conv_filters;
      if (o_kernel->count()) config.hyper.kernel_size = hyper.kernel_size;

      const TrainOutputs outputs = CmdTrain(config);
      out << MetricsTsv(outputs.metrics, LoadModel(outputs.model_path).class_names);
      out << "model: " << outputs.model_path.string() << '\n'
          << "history: " << outputs.history_path.string() << '\n'
          << "metrics: " << outputs.metrics_path.string() << '\n';
    } else if (evaluate->parsed()) {
      eval_options.model_path = eval_model;
      eval_options.data_path = eval_data;
      eval_options.data.format = eval_format;
      eval_options.report_path = eval_report;
      if (!eval_emb.empty() || eval_synth > 0) {
        eval_options.embedding = EmbeddingConfig{eval_emb, eval_synth};
      }
      std::string report;
      CmdEvaluate(eval_options, &report);
      out << report;
    } else if (explain->parsed()) {
      ex.model_path = ex_model;
      if (o_input->count()) {
        ex.text = ReadFile(ex_input);
        if (ex.doc_id == "input") ex.doc_id = fs::path(ex_input).filename().string();
      } else if (o_text->count()) {
        ex.text = ex_text;
      } else {
        throw ConfigError("explain: pass --text or --input");
      }
      if (o_target->count()) ex.target_class = ex_target;
      if (!ex_emb.empty() || ex_synth > 0) ex.embedding = EmbeddingConfig{ex_emb, ex_synth};
      if (o_ex_maxlen->count()) ex.max_len = ex_maxlen;
      ex.output_dir = "out";
      if (auto env = env_output_dir()) ex.output_dir = *env;
      if (o_ex_out->count()) ex.output_dir = ex_out;

      const ExplainOutputs outputs = CmdExplain(ex);
      const auto &e = outputs.explanation;
      out << "predicted: " << e.predicted_class_name << '\n';
      if (e.counterfactual) out << "explained: " << e.class_name << " (counterfactual target)\n";
      out << "f_c: " << e.score << '\n'
          << "conservation residual: " << e.conservation_residual
          << " (relative " << outputs.relevance.RelativeResidual() << ")\n"
          << TopKTsv(outputs.top_words)
          << "html: " << outputs.html_path.string() << '\n'
          << "json: " << outputs.json_path.string() << '\n'
          << "top-k: " << outputs.topk_path.string() << '\n';
    } else if (inspect->parsed()) {
      if (o_make->count()) {
        MakeSyntheticData(synth, synth_dir);
        out << "wrote " << (fs::path(synth_dir) / "corpus.jsonl").string() << ", "
            << (fs::path(synth_dir) / "embeddings.vec").string() << ", "
            << (fs::path(synth_dir) / "config.json").string() << '\n';
      } else {
        if (in_data.empty()) throw ConfigError("inspect-data: pass --data or --make-synthetic");
        in_config.format = in_format;
        const InspectOutputs outputs = CmdInspectData(in_data, in_config, in_report);
        out << outputs.table;
      }
    }
  } catch (const ConfigError &e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError &e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace lrptext::cli
