// SPDX-License-Identifier: Apache-2.0

#include "lrptext/explain.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lrptext/errors.h"

namespace lrptext {

namespace {

using json = nlohmann::json;

std::string HtmlEscape(const std::string &text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string Format(const char *fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

std::string ClassLabel(const std::vector<std::string> &names, int index) {
  if (index >= 0 && index < static_cast<int>(names.size())) return names[index];
  return std::to_string(index);
}

}  // namespace

bool Explanation::operator==(const Explanation &other) const {
  if (doc_id != other.doc_id || class_name != other.class_name ||
      predicted_class_name != other.predicted_class_name ||
      counterfactual != other.counterfactual || score != other.score ||
      conservation_residual != other.conservation_residual ||
      sinks.boundary != other.sinks.boundary ||
      sinks.initial_state != other.sinks.initial_state || sinks.bias != other.sinks.bias ||
      no_positive_relevance != other.no_positive_relevance ||
      tokens.size() != other.tokens.size()) {
    return false;
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto &a = tokens[i];
    const auto &b = other.tokens[i];
    if (a.token != b.token || a.position != b.position || a.relevance != b.relevance ||
        a.intensity != b.intensity) {
      return false;
    }
  }
  return true;
}

std::vector<Real> NormalizeScores(std::span<const Real> relevances, bool *no_positive) {
  Real max_positive = 0;
  for (Real r : relevances) max_positive = std::max(max_positive, r);
  std::vector<Real> intensities(relevances.size(), 0.0);
  if (no_positive != nullptr) *no_positive = max_positive <= 0;
  if (max_positive <= 0) return intensities;
  for (std::size_t i = 0; i < relevances.size(); ++i) {
    intensities[i] = relevances[i] > 0 ? std::min<Real>(1.0, relevances[i] / max_positive) : 0.0;
  }
  return intensities;
}

Explanation MakeExplanation(const std::string &doc_id, const RelevanceResult &result,
                            const std::vector<std::string> &class_names) {
  Explanation e;
  e.doc_id = doc_id;
  e.class_name = ClassLabel(class_names, result.target_class);
  e.predicted_class_name = ClassLabel(class_names, result.prediction.predicted_class);
  e.counterfactual = result.target_class != result.prediction.predicted_class;
  e.score = result.target_score;
  e.conservation_residual = result.conservation_residual;
  e.sinks = result.sinks;

  std::vector<Real> raw;
  raw.reserve(result.tokens.size());
  for (const auto &t : result.tokens) raw.push_back(t.relevance);
  const auto intensities = NormalizeScores(raw, &e.no_positive_relevance);
  for (std::size_t i = 0; i < result.tokens.size(); ++i) {
    e.tokens.push_back(ExplainedToken{result.tokens[i].token, result.tokens[i].position,
                                      raw[i], intensities[i]});
  }
  return e;
}

std::string RenderHtml(const Explanation &explanation, const HtmlOptions &options) {
  Real most_negative = 0;
  for (const auto &t : explanation.tokens) most_negative = std::min(most_negative, t.relevance);

  std::ostringstream out;
  out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
      << "<title>Explanation: " << HtmlEscape(explanation.doc_id) << "</title>\n"
      << "<style>\n"
      << "body { font-family: sans-serif; max-width: 60em; margin: 2em auto; }\n"
      << ".doc { line-height: 2; }\n"
      << ".tok { padding: 0.1em 0.2em; border-radius: 0.2em; }\n"
      << "</style>\n</head>\n<body>\n";
  out << "<h1>Predicted class: " << HtmlEscape(explanation.predicted_class_name) << "</h1>\n";
  if (explanation.counterfactual) {
    out << "<p class=\"target\">Explained class: " << HtmlEscape(explanation.class_name)
        << " (counterfactual target)</p>\n";
  }
  out << "<p class=\"score\">Score f_c = " << Format("%.6f", explanation.score)
      << "; conservation residual = " << Format("%.3e", explanation.conservation_residual)
      << "</p>\n";
  out << "<p class=\"doc\">\n";
  for (const auto &t : explanation.tokens) {
    std::string color = "rgba(255, 0, 0, " + Format("%.3f", t.intensity) + ")";
    if (options.show_negative && t.relevance < 0 && most_negative < 0) {
      color = "rgba(0, 0, 255, " + Format("%.3f", t.relevance / most_negative) + ")";
    }
    out << "<span class=\"tok\" style=\"background-color: " << color << "\" title=\""
        << Format("%.6g", t.relevance) << "\">" << HtmlEscape(t.token) << "</span>\n";
  }
  out << "</p>\n</body>\n</html>\n";
  return out.str();
}

std::string RenderJson(const Explanation &explanation) {
  json tokens = json::array();
  for (const auto &t : explanation.tokens) {
    tokens.push_back({{"token", t.token},
                      {"position", t.position},
                      {"relevance", t.relevance},
                      {"intensity", t.intensity}});
  }
  json doc{{"doc_id", explanation.doc_id},
           {"class", explanation.class_name},
           {"predicted_class", explanation.predicted_class_name},
           {"counterfactual_target", explanation.counterfactual},
           {"f_c", explanation.score},
           {"conservation_residual", explanation.conservation_residual},
           {"no_positive_relevance", explanation.no_positive_relevance},
           {"sinks",
            {{"boundary", explanation.sinks.boundary},
             {"initial_state", explanation.sinks.initial_state},
             {"bias", explanation.sinks.bias}}},
           {"tokens", std::move(tokens)}};
  return doc.dump(2) + "\n";
}

Explanation ParseExplanationJson(const std::string &text) {
  try {
    const json doc = json::parse(text);
    Explanation e;
    e.doc_id = doc.at("doc_id").get<std::string>();
    e.class_name = doc.at("class").get<std::string>();
    e.predicted_class_name = doc.value("predicted_class", e.class_name);
    e.counterfactual = doc.value("counterfactual_target", false);
    e.score = doc.at("f_c").get<Real>();
    e.conservation_residual = doc.at("conservation_residual").get<Real>();
    e.no_positive_relevance = doc.value("no_positive_relevance", false);
    if (auto it = doc.find("sinks"); it != doc.end()) {
      e.sinks.boundary = it->at("boundary").get<Real>();
      e.sinks.initial_state = it->at("initial_state").get<Real>();
      e.sinks.bias = it->at("bias").get<Real>();
    }
    for (const auto &t : doc.at("tokens")) {
      e.tokens.push_back(ExplainedToken{t.at("token").get<std::string>(),
                                        t.at("position").get<int>(),
                                        t.at("relevance").get<Real>(),
                                        t.at("intensity").get<Real>()});
    }
    return e;
  } catch (const json::exception &e) {
    throw FormatError(std::string("invalid explanation JSON: ") + e.what());
  }
}

std::vector<RankedWord> TopKWords(const Explanation &explanation, int k) {
  if (k < 1) throw ConfigError("k must be at least 1");
  std::map<std::string, RankedWord> best;
  for (const auto &t : explanation.tokens) {
    auto [it, inserted] = best.emplace(t.token, RankedWord{t.token, t.position, t.relevance});
    if (!inserted) {
      auto &w = it->second;
      if (t.relevance > w.relevance || (t.relevance == w.relevance && t.position < w.position)) {
        w.position = t.position;
        w.relevance = t.relevance;
      }
    }
  }
  std::vector<RankedWord> ranked;
  ranked.reserve(best.size());
  for (auto &[token, word] : best) ranked.push_back(std::move(word));
  std::sort(ranked.begin(), ranked.end(), [](const RankedWord &a, const RankedWord &b) {
    if (a.relevance != b.relevance) return a.relevance > b.relevance;
    return a.position < b.position;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
  return ranked;
}

std::string TopKTsv(const std::vector<RankedWord> &words) {
  std::ostringstream out;
  out << "rank\ttoken\tposition\trelevance\n";
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << i + 1 << '\t' << words[i].token << '\t' << words[i].position << '\t'
        << Format("%.9g", words[i].relevance) << '\n';
  }
  return out.str();
}

void WriteTextFile(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace lrptext
