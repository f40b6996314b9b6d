#pragma once

#include <span>
#include <vector>

#include "spanemo/label_space.hpp"

namespace spanemo {

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] inside BCE.
inline constexpr double kProbEpsilon = 1e-7;

struct LossConfig {
  double alpha = 0.2;  // weight of the label-correlation term, in [0,1]

  void validate() const;
};

struct LossValue {
  double total = 0.0;
  double bce_part = 0.0;
  double lca_part = 0.0;
};

/// Mean over classes of -[y log ŷ + (1-y) log(1-ŷ)].
double bce_loss(const LabelVector& y, std::span<const double> probs);
double bce_loss(const LabelVector& y, const ProbabilityVector& probs);

/// Label-correlation-aware loss:
///   1/(|Y0||Y1|) Σ_{p∈Y0, q∈Y1} exp(ŷ_p − ŷ_q)
/// Zero when either partition is empty.
double lca_loss(const LabelVector& y, std::span<const double> probs);
double lca_loss(const LabelVector& y, const ProbabilityVector& probs);

/// (1-α)·mean BCE + α·mean LCA over the batch. Throws UsageError on an empty
/// batch and DimensionError on length mismatches.
LossValue joint_loss(const std::vector<LabelVector>& ys,
                     const std::vector<std::vector<double>>& probs, const LossConfig& cfg);
LossValue joint_loss(const std::vector<LabelVector>& ys,
                     const std::vector<ProbabilityVector>& probs, const LossConfig& cfg);

/// ∂bce/∂ŷ. Zero where the clamp is active.
std::vector<double> bce_gradient(const LabelVector& y, std::span<const double> probs);
/// ∂lca/∂ŷ. Zero vector when either partition is empty.
std::vector<double> lca_gradient(const LabelVector& y, std::span<const double> probs);
/// ∂joint/∂ŷ for every example of the batch.
std::vector<std::vector<double>> joint_gradient(const std::vector<LabelVector>& ys,
                                                const std::vector<std::vector<double>>& probs,
                                                const LossConfig& cfg);

}  // namespace spanemo
