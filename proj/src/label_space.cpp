#include "spanemo/label_space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "spanemo/error.hpp"
#include "spanemo/tweet_normalizer.hpp"

namespace spanemo {

LabelSpace::LabelSpace(std::vector<std::string> names, std::vector<std::string> surface_tokens)
    : names_(std::move(names)), surface_tokens_(std::move(surface_tokens)) {
  if (names_.size() < 2) throw UsageError("label space needs at least 2 labels");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw UsageError("empty label name");
    if (!seen.insert(n).second) throw UsageError("duplicate label name: " + n);
  }
  if (surface_tokens_.empty()) {
    for (const auto& n : names_) surface_tokens_.push_back(utf8_lower(n));
  }
  if (surface_tokens_.size() != names_.size())
    throw UsageError("surface token count does not match label count");
  for (const auto& t : surface_tokens_)
    if (t.empty()) throw UsageError("empty label surface token");
}

int LabelSpace::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

LabelSpace LabelSpace::with_surface_tokens(std::vector<std::string> surface_tokens) const {
  return LabelSpace(names_, std::move(surface_tokens));
}

LabelSpace default_semeval_space() {
  return LabelSpace({"anger", "anticipation", "disgust", "fear", "joy", "love", "optimism",
                     "pessimism", "sadness", "surprise", "trust"});
}

LabelSpace semeval_space_for_language(const std::string& language) {
  auto space = default_semeval_space();
  if (language == "english") return space;
  if (language == "arabic") {
    return space.with_surface_tokens({"غضب", "ترقب", "اشمئزاز", "خوف", "فرح", "حب", "تفاؤل",
                                      "تشاؤم", "حزن", "مفاجأة", "ثقة"});
  }
  if (language == "spanish") {
    return space.with_surface_tokens({"ira", "anticipación", "asco", "miedo", "alegría", "amor",
                                      "optimismo", "pesimismo", "tristeza", "sorpresa",
                                      "confianza"});
  }
  throw UsageError("unknown language: " + language + " (expected english, arabic or spanish)");
}

LabelVector::LabelVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_)
    if (b > 1) throw UsageError("label vector entries must be 0 or 1");
}

std::size_t LabelVector::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ProbabilityVector::ProbabilityVector(std::vector<double> probs) : probs_(std::move(probs)) {
  for (double p : probs_)
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("probability outside [0,1]");
}

LabelPartition partition(const LabelVector& y) {
  LabelPartition out;
  for (std::size_t i = 0; i < y.size(); ++i) (y.test(i) ? out.positives : out.negatives).push_back(i);
  return out;
}

}  // namespace spanemo
