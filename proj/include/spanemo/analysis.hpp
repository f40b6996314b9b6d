#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "spanemo/dataset.hpp"
#include "spanemo/metrics.hpp"
#include "spanemo/span_model.hpp"
#include "spanemo/trainer.hpp"

namespace spanemo {

double cosine_similarity(const RowVector& a, const RowVector& b);

struct WordScore {
  std::string word;
  double similarity = 0.0;
};

/// Per emotion: top-k sentence words by mean label/word cosine similarity.
struct AssociationTable {
  std::vector<std::string> labels;
  std::vector<std::vector<WordScore>> rows;
};

/// For each example, compares the hidden state at every label position with
/// every sentence word (multi-piece words averaged), aggregates the mean per
/// (emotion, word) and keeps the k highest, ties broken alphabetically.
/// "<user>" and "<url>" are skipped. Throws UsageError for an empty dataset
/// or a sentence-only model.
AssociationTable word_associations(const SpanModel& model, const Dataset& data, std::size_t k);

/// |C| × words cosine similarities for one example.
struct SimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<std::string> words;
  Matrix values;
};

/// Throws UsageError for an empty sentence or a sentence-only model.
SimilarityMatrix sentence_heatmap(const SpanModel& model, const Example& example);

enum class CorrelationSource { gold, predicted };
std::string to_string(CorrelationSource source);

/// Pearson correlation between binary label columns. A constant column makes
/// its row and column undefined (NaN), including the diagonal cell.
struct CorrelationMatrix {
  std::vector<std::string> labels;
  Matrix values;
  CorrelationSource source = CorrelationSource::gold;

  bool defined(std::size_t i, std::size_t j) const;
};

/// Throws UsageError for fewer than two examples.
CorrelationMatrix label_correlations(const std::vector<LabelVector>& labels,
                                     const LabelSpace& space, CorrelationSource source);

struct SweepRow {
  double alpha = 0.0;
  bool ok = false;
  MetricReport valid;
  std::string error;
};

/// One training run per α with the shared seed; failures are recorded in the
/// row and the sweep continues. Each run writes under out_dir/alpha_<value>.
std::vector<SweepRow> alpha_sweep(const TrainConfig& cfg, const std::vector<double>& grid,
                                  const Dataset& train, const Dataset& valid,
                                  const std::filesystem::path& out_dir);

std::vector<double> default_alpha_grid();

// CSV / figure emission. Each writes `<stem>.csv`, `<stem>.svg`, `<stem>.png`
// (associations: `.csv` and `.json` only).
void write_associations(const std::filesystem::path& dir, const AssociationTable& table);
void write_similarity(const std::filesystem::path& dir, const std::string& stem,
                      const SimilarityMatrix& matrix);
void write_correlations(const std::filesystem::path& dir, const std::string& stem,
                        const CorrelationMatrix& matrix);
void write_sweep(const std::filesystem::path& dir, const std::vector<SweepRow>& rows);

std::string similarity_csv(const SimilarityMatrix& matrix);
std::string correlation_csv(const CorrelationMatrix& matrix);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace spanemo
