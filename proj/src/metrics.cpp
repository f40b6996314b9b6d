#include "spanemo/metrics.hpp"

#include <sstream>

#include <fmt/format.h>

#include "spanemo/error.hpp"

namespace spanemo {
namespace {

double f1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

MetricReport evaluate(const std::vector<LabelVector>& gold, const std::vector<LabelVector>& pred) {
  if (gold.size() != pred.size())
    throw UsageError(fmt::format("gold has {} examples, predictions {}", gold.size(), pred.size()));
  if (gold.empty()) throw UsageError("cannot evaluate an empty set");
  const std::size_t classes = gold.front().size();
  std::vector<std::size_t> tp(classes, 0), fp(classes, 0), fn(classes, 0);
  MetricReport r;
  r.support.assign(classes, 0);
  double jaccard_sum = 0.0;
  for (std::size_t e = 0; e < gold.size(); ++e) {
    if (gold[e].size() != classes || pred[e].size() != classes)
      throw UsageError(fmt::format("example {} has inconsistent class count", e));
    std::size_t inter = 0, uni = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const bool g = gold[e].test(c), p = pred[e].test(c);
      if (g) ++r.support[c];
      if (g && p) ++tp[c];
      if (!g && p) ++fp[c];
      if (g && !p) ++fn[c];
      if (g && p) ++inter;
      if (g || p) ++uni;
    }
    jaccard_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  }
  r.examples = gold.size();
  r.per_class_f1.resize(classes);
  double macro = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    r.true_positives += tp[c];
    r.false_positives += fp[c];
    r.false_negatives += fn[c];
    r.per_class_f1[c] = f1(tp[c], fp[c], fn[c]);
    macro += r.per_class_f1[c];
  }
  r.macro_f1 = macro / static_cast<double>(classes);
  r.micro_f1 = f1(r.true_positives, r.false_positives, r.false_negatives);
  r.jaccard = jaccard_sum / static_cast<double>(gold.size());
  return r;
}

MetricReport stratified_eval(const std::vector<LabelVector>& gold, const std::vector<LabelVector>& pred,
                             std::size_t min_k) {
  if (min_k < 1) throw UsageError("min_k must be at least 1");
  if (gold.size() != pred.size()) throw UsageError("gold and predictions differ in size");
  std::vector<LabelVector> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].count() >= min_k) {
      g.push_back(gold[i]);
      p.push_back(pred[i]);
    }
  }
  if (g.empty()) throw EmptyStratumError(fmt::format("no examples with at least {} gold labels", min_k));
  return evaluate(g, p);
}

nlohmann::json to_json(const MetricReport& report, const LabelSpace& space) {
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < report.per_class_f1.size(); ++c) {
    const std::string name = c < space.size() ? space.name(c) : std::to_string(c);
    per_class[name] = {{"f1", report.per_class_f1[c]}, {"support", report.support[c]}};
  }
  nlohmann::ordered_json j;
  j["examples"] = report.examples;
  j["miF1"] = report.micro_f1;
  j["maF1"] = report.macro_f1;
  j["jacS"] = report.jaccard;
  j["per_class"] = per_class;
  return nlohmann::json::parse(j.dump());
}

std::string format_reports(const std::vector<std::pair<std::string, MetricReport>>& reports) {
  std::size_t width = 8;
  for (const auto& [name, _] : reports) width = std::max(width, name.size() + 2);
  std::ostringstream os;
  os << fmt::format("{:<{}}{:>10}{:>8}{:>8}{:>8}\n", "subset", width, "examples", "miF1", "maF1", "jacS");
  for (const auto& [name, r] : reports)
    os << fmt::format("{:<{}}{:>10}{:>8.3f}{:>8.3f}{:>8.3f}\n", name, width, r.examples, r.micro_f1, r.macro_f1,
                      r.jaccard);
  return os.str();
}

}  // namespace spanemo
