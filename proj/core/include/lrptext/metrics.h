// SPDX-License-Identifier: Apache-2.0

#ifndef LRPTEXT_METRICS_H_
#define LRPTEXT_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "lrptext/tensor.h"

namespace lrptext {

struct ClassMetrics {
  Real precision = 0;
  Real recall = 0;
  Real f1 = 0;
  std::size_t support = 0;
  // Set when the corresponding denominator was zero and 0 was reported.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct Metrics {
  std::vector<ClassMetrics> per_class;
  Real macro_precision = 0;
  Real macro_recall = 0;
  Real macro_f1 = 0;
  Real accuracy = 0;
  // confusion[gold][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t total = 0;

  bool AnyUndefined() const;
};

// Precision TP/(TP+FP), recall TP/(TP+FN), F1 their harmonic mean, per class
// and macro-averaged over all classes. Throws DataError on empty input or
// out-of-range labels.
Metrics ComputeMetrics(std::span<const int> gold, std::span<const int> predicted,
                       int num_classes);

// "class\tprecision\trecall\tf1" rows for every class and a final "macro"
// row, values with 4 decimals.
std::string MetricsTsv(const Metrics &metrics, const std::vector<std::string> &class_names);

}  // namespace lrptext

#endif  // LRPTEXT_METRICS_H_
