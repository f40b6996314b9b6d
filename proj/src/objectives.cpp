#include "spanemo/objectives.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "spanemo/error.hpp"

namespace spanemo {
namespace {

void check_lengths(const LabelVector& y, std::span<const double> probs) {
  if (y.size() != probs.size())
    throw DimensionError(fmt::format("label vector has {} entries, probabilities {}", y.size(), probs.size()));
}

void check_batch(const std::vector<LabelVector>& ys, std::size_t n_probs) {
  if (ys.empty()) throw UsageError("joint loss needs a non-empty batch");
  if (ys.size() != n_probs) throw DimensionError("batch labels and probabilities differ in size");
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0,1]");
}

double bce_loss(const LabelVector& y, std::span<const double> probs) {
  check_lengths(y, probs);
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbEpsilon, 1.0 - kProbEpsilon);
    sum -= y.test(i) ? std::log(p) : std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

double bce_loss(const LabelVector& y, const ProbabilityVector& probs) { return bce_loss(y, probs.values()); }

double lca_loss(const LabelVector& y, std::span<const double> probs) {
  check_lengths(y, probs);
  const auto part = partition(y);
  if (part.negatives.empty() || part.positives.empty()) return 0.0;
  double sum = 0.0;
  for (auto p : part.negatives)
    for (auto q : part.positives) sum += std::exp(probs[p] - probs[q]);
  return sum / static_cast<double>(part.negatives.size() * part.positives.size());
}

double lca_loss(const LabelVector& y, const ProbabilityVector& probs) { return lca_loss(y, probs.values()); }

LossValue joint_loss(const std::vector<LabelVector>& ys, const std::vector<std::vector<double>>& probs,
                     const LossConfig& cfg) {
  cfg.validate();
  check_batch(ys, probs.size());
  LossValue v;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    v.bce_part += bce_loss(ys[i], probs[i]);
    v.lca_part += lca_loss(ys[i], probs[i]);
  }
  const auto n = static_cast<double>(ys.size());
  v.bce_part /= n;
  v.lca_part /= n;
  v.total = (1.0 - cfg.alpha) * v.bce_part + cfg.alpha * v.lca_part;
  return v;
}

LossValue joint_loss(const std::vector<LabelVector>& ys, const std::vector<ProbabilityVector>& probs,
                     const LossConfig& cfg) {
  std::vector<std::vector<double>> raw;
  raw.reserve(probs.size());
  for (const auto& p : probs) raw.push_back(p.values());
  return joint_loss(ys, raw, cfg);
}

std::vector<double> bce_gradient(const LabelVector& y, std::span<const double> probs) {
  check_lengths(y, probs);
  const auto c = static_cast<double>(probs.size());
  std::vector<double> g(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (p <= kProbEpsilon || p >= 1.0 - kProbEpsilon) continue;
    g[i] = (y.test(i) ? -1.0 / p : 1.0 / (1.0 - p)) / c;
  }
  return g;
}

std::vector<double> lca_gradient(const LabelVector& y, std::span<const double> probs) {
  check_lengths(y, probs);
  std::vector<double> g(probs.size(), 0.0);
  const auto part = partition(y);
  if (part.negatives.empty() || part.positives.empty()) return g;
  const double norm = 1.0 / static_cast<double>(part.negatives.size() * part.positives.size());
  for (auto p : part.negatives) {
    for (auto q : part.positives) {
      const double e = norm * std::exp(probs[p] - probs[q]);
      g[p] += e;
      g[q] -= e;
    }
  }
  return g;
}

std::vector<std::vector<double>> joint_gradient(const std::vector<LabelVector>& ys,
                                                const std::vector<std::vector<double>>& probs,
                                                const LossConfig& cfg) {
  cfg.validate();
  check_batch(ys, probs.size());
  const double n = static_cast<double>(ys.size());
  std::vector<std::vector<double>> out;
  out.reserve(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    auto gb = bce_gradient(ys[i], probs[i]);
    const auto gl = lca_gradient(ys[i], probs[i]);
    for (std::size_t c = 0; c < gb.size(); ++c) gb[c] = ((1.0 - cfg.alpha) * gb[c] + cfg.alpha * gl[c]) / n;
    out.push_back(std::move(gb));
  }
  return out;
}

}  // namespace spanemo
