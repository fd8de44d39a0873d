// SPDX-License-Identifier: Apache-2.0

#include "lrptext/metrics.h"

#include <iomanip>
#include <sstream>

#include "lrptext/errors.h"

namespace lrptext {

bool Metrics::AnyUndefined() const {
  for (const auto &c : per_class) {
    if (c.precision_undefined || c.recall_undefined || c.f1_undefined) return true;
  }
  return false;
}

Metrics ComputeMetrics(std::span<const int> gold, std::span<const int> predicted,
                       int num_classes) {
  if (gold.size() != predicted.size()) throw DataError("gold/predicted length mismatch");
  if (gold.empty()) throw DataError("cannot evaluate an empty set");
  if (num_classes < 1) throw DataError("number of classes must be positive");

  Metrics m;
  m.total = gold.size();
  m.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    if (gold[n] < 0 || gold[n] >= num_classes || predicted[n] < 0 ||
        predicted[n] >= num_classes) {
      throw DataError("label out of range at sample " + std::to_string(n));
    }
    m.confusion[gold[n]][predicted[n]]++;
    correct += gold[n] == predicted[n] ? 1 : 0;
  }
  m.accuracy = static_cast<Real>(correct) / m.total;

  m.per_class.resize(num_classes);
  for (int k = 0; k < num_classes; ++k) {
    std::size_t tp = m.confusion[k][k];
    std::size_t predicted_k = 0;
    std::size_t gold_k = 0;
    for (int j = 0; j < num_classes; ++j) {
      predicted_k += m.confusion[j][k];
      gold_k += m.confusion[k][j];
    }
    auto &c = m.per_class[k];
    c.support = gold_k;
    if (predicted_k == 0) {
      c.precision_undefined = true;
    } else {
      c.precision = static_cast<Real>(tp) / predicted_k;
    }
    if (gold_k == 0) {
      c.recall_undefined = true;
    } else {
      c.recall = static_cast<Real>(tp) / gold_k;
    }
    if (c.precision + c.recall == 0) {
      c.f1_undefined = true;
    } else {
      c.f1 = 2 * c.precision * c.recall / (c.precision + c.recall);
    }
    m.macro_precision += c.precision;
    m.macro_recall += c.recall;
    m.macro_f1 += c.f1;
  }
  m.macro_precision /= num_classes;
  m.macro_recall /= num_classes;
  m.macro_f1 /= num_classes;
  return m;
}

std::string MetricsTsv(const Metrics &metrics, const std::vector<std::string> &class_names) {
  std::ostringstream out;
  out << "class\tprecision\trecall\tf1\n" << std::fixed << std::setprecision(4);
  for (std::size_t k = 0; k < metrics.per_class.size(); ++k) {
    const auto &c = metrics.per_class[k];
    out << (k < class_names.size() ? class_names[k] : std::to_string(k)) << '\t'
        << c.precision << '\t' << c.recall << '\t' << c.f1 << '\n';
  }
  out << "macro\t" << metrics.macro_precision << '\t' << metrics.macro_recall << '\t'
      << metrics.macro_f1 << '\n';
  return out.str();
}

}  // namespace lrptext
