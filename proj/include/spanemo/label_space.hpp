#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace spanemo {

/// Ordered set of emotion classes. Index i of every label/probability vector
/// refers to names()[i]; the order follows the E-c file's column order.
class LabelSpace {
 public:
  /// Throws UsageError for fewer than 2 labels, duplicate names, or a
  /// surface-token list of the wrong length. Empty `surface_tokens` means
  /// "lower-cased names".
  explicit LabelSpace(std::vector<std::string> names,
                      std::vector<std::string> surface_tokens = {});

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::string>& surface_tokens() const { return surface_tokens_; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  /// Index of a label name, or -1.
  int index_of(const std::string& name) const;

  /// Same label set, surface tokens replaced (e.g. translated label words).
  LabelSpace with_surface_tokens(std::vector<std::string> surface_tokens) const;

  bool operator==(const LabelSpace& other) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<std::string> surface_tokens_;
};

/// The 11 SemEval-2018 E-c classes in canonical column order.
LabelSpace default_semeval_space();

/// Surface tokens for a language tag ("english", "arabic", "spanish").
/// The names stay English because the E-c files use English headers in all
/// three languages. Throws UsageError for unknown languages.
LabelSpace semeval_space_for_language(const std::string& language);

class LabelVector {
 public:
  LabelVector() = default;
  explicit LabelVector(std::size_t size) : bits_(size, 0) {}
  /// Throws UsageError if any entry is not 0 or 1.
  explicit LabelVector(std::vector<std::uint8_t> bits);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.at(i) != 0; }
  void set(std::size_t i, bool on) { bits_.at(i) = on ? 1 : 0; }
  std::size_t count() const;
  bool empty_set() const { return count() == 0; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  bool operator==(const LabelVector& other) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  /// Throws UsageError for entries outside [0,1] or NaN.
  explicit ProbabilityVector(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::vector<double>& values() const { return probs_; }

  bool operator==(const ProbabilityVector& other) const = default;

 private:
  std::vector<double> probs_;
};

struct LabelPartition {
  std::vector<std::size_t> negatives;
  std::vector<std::size_t> positives;
};

LabelPartition partition(const LabelVector& y);

}  // namespace spanemo
