#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "spanemo/label_space.hpp"

namespace spanemo {

struct MetricReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double jaccard = 0.0;
  std::vector<double> per_class_f1;
  std::vector<std::size_t> support;  // gold positives per class
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  std::size_t examples = 0;
};

/// Micro F1 over pooled cells, macro F1 as the mean of per-class F1 (0/0 -> 0),
/// and the mean per-example Jaccard index (both sets empty -> 1).
/// Throws UsageError on length mismatch or an empty input.
MetricReport evaluate(const std::vector<LabelVector>& gold, const std::vector<LabelVector>& pred);

/// evaluate() over examples whose gold label count is at least `min_k`.
/// Throws UsageError for min_k < 1 and EmptyStratumError when nothing qualifies.
MetricReport stratified_eval(const std::vector<LabelVector>& gold,
                             const std::vector<LabelVector>& pred, std::size_t min_k);

nlohmann::json to_json(const MetricReport& report, const LabelSpace& space);

/// Aligned text table, one row per named report.
std::string format_reports(const std::vector<std::pair<std::string, MetricReport>>& reports);

}  // namespace spanemo
