// SPDX-License-Identifier: Apache-2.0

#include "run_config.h"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrptext/errors.h"

namespace lrptext::cli {

namespace {

using json = nlohmann::json;

template <typename T>
T Get(const json &value, const std::string &field) {
  try {
    return value.get<T>();
  } catch (const json::exception &) {
    throw ConfigError(field + ": wrong type (" + std::string(value.type_name()) + ")");
  }
}

using Setter = std::function<void(const json &, const std::string &)>;

// Walks `object`, dispatching leaves to `setters` keyed by dotted path.
void Apply(const json &object, const std::string &prefix,
           const std::map<std::string, Setter> &setters) {
  if (!object.is_object()) {
    throw ConfigError((prefix.empty() ? std::string("config") : prefix) +
                      ": expected an object");
  }
  for (const auto &[key, value] : object.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (auto it = setters.find(path); it != setters.end()) {
      it->second(value, path);
    } else if (value.is_object()) {
      Apply(value, path, setters);
    } else {
      throw ConfigError(path + ": unknown key");
    }
  }
}

void RequirePositive(long value, const std::string &field) {
  if (value <= 0) throw ConfigError(field + ": must be positive");
}

void RequireFile(const std::string &path, const std::string &field) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(field + ": file not found: " + path);
  }
}

}  // namespace

DatasetFormat ResolveFormat(const std::string &format, const std::filesystem::path &path) {
  if (format == "auto") return DatasetFormatFromPath(path);
  return ParseDatasetFormat(format);
}

void RunConfig::MergeJson(const std::string &text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error &e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig &c = *this;
  const std::map<std::string, Setter> setters = {
      {"data.train", [&](const json &v, const std::string &f) { c.data.train = Get<std::string>(v, f); }},
      {"data.valid", [&](const json &v, const std::string &f) { c.data.valid = Get<std::string>(v, f); }},
      {"data.test", [&](const json &v, const std::string &f) { c.data.test = Get<std::string>(v, f); }},
      {"data.format", [&](const json &v, const std::string &f) { c.data.format = Get<std::string>(v, f); }},
      {"data.text_field", [&](const json &v, const std::string &f) { c.data.text_field = Get<std::string>(v, f); }},
      {"data.label_field", [&](const json &v, const std::string &f) { c.data.label_field = Get<std::string>(v, f); }},
      {"data.id_field", [&](const json &v, const std::string &f) { c.data.id_field = Get<std::string>(v, f); }},
      {"data.train_fraction", [&](const json &v, const std::string &f) { c.data.train_fraction = Get<double>(v, f); }},
      {"data.max_len", [&](const json &v, const std::string &f) { c.data.max_len = Get<int>(v, f); }},
      {"embedding.path", [&](const json &v, const std::string &f) { c.embedding.path = Get<std::string>(v, f); }},
      {"embedding.synthetic_dim", [&](const json &v, const std::string &f) { c.embedding.synthetic_dim = Get<int>(v, f); }},
      {"model.arch", [&](const json &v, const std::string &f) {
         try {
           c.arch = ParseArchitecture(Get<std::string>(v, f));
         } catch (const ConfigError &e) {
           throw ConfigError(f + ": " + e.what());
         }
       }},
      {"model.lstm_units_1", [&](const json &v, const std::string &f) { c.hyper.lstm_units_1 = Get<int>(v, f); }},
      {"model.lstm_units_2", [&](const json &v, const std::string &f) { c.hyper.lstm_units_2 = Get<int>(v, f); }},
      {"model.dense_units", [&](const json &v, const std::string &f) { c.hyper.dense_units = Get<int>(v, f); }},
      {"model.conv_filters", [&](const json &v, const std::string &f) { c.hyper.conv_filters = Get<int>(v, f); }},
      {"model.kernel_size", [&](const json &v, const std::string &f) { c.hyper.kernel_size = Get<int>(v, f); }},
      {"train.epochs", [&](const json &v, const std::string &f) { c.train.epochs = Get<int>(v, f); }},
      {"train.batch_size", [&](const json &v, const std::string &f) { c.train.batch_size = Get<int>(v, f); }},
      {"train.learning_rate", [&](const json &v, const std::string &f) { c.train.learning_rate = Get<double>(v, f); }},
      {"train.optimizer", [&](const json &v, const std::string &f) {
         try {
           c.train.optimizer = ParseOptimizer(Get<std::string>(v, f));
         } catch (const ConfigError &e) {
           throw ConfigError(f + ": " + e.what());
         }
       }},
      {"train.beta1", [&](const json &v, const std::string &f) { c.train.beta1 = Get<double>(v, f); }},
      {"train.beta2", [&](const json &v, const std::string &f) { c.train.beta2 = Get<double>(v, f); }},
      {"train.adam_epsilon", [&](const json &v, const std::string &f) { c.train.adam_epsilon = Get<double>(v, f); }},
      {"train.class_weights", [&](const json &v, const std::string &f) { c.train.class_weights = Get<std::vector<double>>(v, f); }},
      {"train.patience", [&](const json &v, const std::string &f) { c.train.patience = Get<int>(v, f); }},
      {"lrp.epsilon", [&](const json &v, const std::string &f) { c.lrp.epsilon = Get<double>(v, f); }},
      {"lrp.delta", [&](const json &v, const std::string &f) { c.lrp.delta = Get<int>(v, f); }},
      {"output_dir", [&](const json &v, const std::string &f) { c.output_dir = Get<std::string>(v, f); }},
      {"seed", [&](const json &v, const std::string &f) { c.seed = Get<std::uint64_t>(v, f); }},
  };
  Apply(root, "", setters);
}

RunConfig RunConfig::FromFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  RunConfig config;
  config.MergeJson(buffer.str());
  return config;
}

void RunConfig::ValidateForTraining() const {
  if (!seed) throw ConfigError("seed: required");
  if (data.train.empty()) throw ConfigError("data.train: required");
  RequireFile(data.train, "data.train");
  if (!data.valid.empty()) RequireFile(data.valid, "data.valid");
  if (!data.test.empty()) RequireFile(data.test, "data.test");
  try {
    ResolveFormat(data.format, data.train);
  } catch (const ConfigError &e) {
    throw ConfigError(std::string("data.format: ") + e.what());
  }
  if (!(data.train_fraction > 0 && data.train_fraction < 1)) {
    throw ConfigError("data.train_fraction: must lie in (0, 1)");
  }
  RequirePositive(data.max_len, "data.max_len");
  if (embedding.path.empty()) {
    if (embedding.synthetic_dim <= 0) {
      throw ConfigError("embedding: set embedding.path or a positive embedding.synthetic_dim");
    }
  } else {
    RequireFile(embedding.path, "embedding.path");
  }
  RequirePositive(hyper.lstm_units_1, "model.lstm_units_1");
  RequirePositive(hyper.lstm_units_2, "model.lstm_units_2");
  RequirePositive(hyper.dense_units, "model.dense_units");
  RequirePositive(hyper.conv_filters, "model.conv_filters");
  RequirePositive(hyper.kernel_size, "model.kernel_size");
  try {
    train.Validate(train.class_weights.empty() ? 0 : static_cast<int>(train.class_weights.size()));
    lrp.Validate();
  } catch (const ConfigError &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (output_dir.empty()) throw ConfigError("output_dir: must not be empty");
}

}  // namespace lrptext::cli
