#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "spanemo/dataset.hpp"
#include "spanemo/metrics.hpp"
#include "spanemo/span_model.hpp"

namespace spanemo {

enum class Ablation { none, no_lca, no_bce, no_label_segment };
std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& text);

enum class SelectionMetric { jaccard, micro_f1, macro_f1 };
std::string to_string(SelectionMetric m);
SelectionMetric parse_selection_metric(const std::string& text);
double select(const MetricReport& report, SelectionMetric metric);

struct EncoderSpec {
  std::string kind = "toy";  // "toy" | "pretrained"
  int toy_dim = 32;
  int toy_window = 64;
  bool toy_positions = true;
  std::string pretrained;  // local path or registry id
};

struct TrainConfig {
  int batch_size = 32;
  int epochs = 20;
  int early_stop_patience = 10;
  double lr_encoder = 2e-5;
  double lr_head = 1e-3;
  double dropout = 0.1;
  double alpha = 0.2;
  std::uint64_t seed = 42;
  Ablation ablation = Ablation::none;
  SelectionMetric selection_metric = SelectionMetric::jaccard;
  double threshold = 0.5;
  std::size_t max_length = 128;
  std::string language = "english";
  EncoderSpec encoder;

  /// α after applying the loss ablations (0 for no_lca, 1 for no_bce).
  double effective_alpha() const;
  HeadKind head_kind() const;
  /// Throws UsageError on out-of-range values.
  void validate() const;

  /// Flat JSON, one key per field.
  nlohmann::json to_json() const;
  /// Overlays keys present in `j` onto `base`; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
  static TrainConfig from_json(const nlohmann::json& j);
};

struct LogRow {
  int epoch = 0;
  std::string split;
  double loss = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double jaccard = 0.0;
};

void write_log_csv(std::ostream& out, const std::vector<LogRow>& log);

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<LogRow> log;
  int best_epoch = 0;
  int epochs_run = 0;
  int validation_rounds = 0;
  MetricReport best_valid;
};

/// Builds a freshly initialized model for `cfg`. The toy encoder's vocabulary
/// covers label surface tokens and every token of `corpus`.
SpanModel build_model(const TrainConfig& cfg, const LabelSpace& space,
                      const std::vector<const Dataset*>& corpus);

/// Fine-tunes with Adam (encoder and head groups), evaluates on `valid` after
/// every epoch, keeps the best checkpoint by the selection metric under
/// `out_dir/checkpoint`, and writes `out_dir/train_log.csv`.
/// Throws UsageError for an empty training set or mismatched label spaces and
/// TrainingError on a non-finite loss.
TrainResult train(const TrainConfig& cfg, const Dataset& train, const Dataset& valid,
                  const std::filesystem::path& out_dir);

/// Same as train() but starts from `model` instead of build_model().
TrainResult train(const TrainConfig& cfg, SpanModel model, const Dataset& train,
                  const Dataset& valid, const std::filesystem::path& out_dir);

/// Eval-mode predictions for every example.
std::vector<ProbabilityVector> predict_probs(const SpanModel& model, const Dataset& data);
std::vector<LabelVector> predict_labels(const SpanModel& model, const Dataset& data,
                                        double threshold);

/// Loads the checkpoint and scores `data`. `threshold` defaults to the one
/// stored in the checkpoint. Throws UsageError on label-space mismatch.
MetricReport evaluate_checkpoint(const std::filesystem::path& checkpoint, const Dataset& data,
                                 std::optional<double> threshold = std::nullopt);

}  // namespace spanemo
