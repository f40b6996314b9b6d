#include "spanemo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "spanemo/adam.hpp"
#include "spanemo/checkpoint.hpp"
#include "spanemo/error.hpp"
#include "spanemo/objectives.hpp"
#include "spanemo/toy_encoder.hpp"
#include "spanemo/transformer_encoder.hpp"

namespace spanemo {
namespace fs = std::filesystem;

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::no_lca: return "no_lca";
    case Ablation::no_bce: return "no_bce";
    case Ablation::no_label_segment: return "no_label_segment";
  }
  return "none";
}

Ablation parse_ablation(const std::string& text) {
  if (text == "none") return Ablation::none;
  if (text == "no_lca") return Ablation::no_lca;
  if (text == "no_bce") return Ablation::no_bce;
  if (text == "no_label_segment") return Ablation::no_label_segment;
  throw UsageError("unknown ablation: " + text + " (none, no_lca, no_bce, no_label_segment)");
}

std::string to_string(SelectionMetric m) {
  switch (m) {
    case SelectionMetric::jaccard: return "jacS";
    case SelectionMetric::micro_f1: return "miF1";
    case SelectionMetric::macro_f1: return "maF1";
  }
  return "jacS";
}

SelectionMetric parse_selection_metric(const std::string& text) {
  if (text == "jacS") return SelectionMetric::jaccard;
  if (text == "miF1") return SelectionMetric::micro_f1;
  if (text == "maF1") return SelectionMetric::macro_f1;
  throw UsageError("unknown selection metric: " + text + " (jacS, miF1, maF1)");
}

double select(const MetricReport& report, SelectionMetric metric) {
  switch (metric) {
    case SelectionMetric::jaccard: return report.jaccard;
    case SelectionMetric::micro_f1: return report.micro_f1;
    case SelectionMetric::macro_f1: return report.macro_f1;
  }
  return report.jaccard;
}

double TrainConfig::effective_alpha() const {
  if (ablation == Ablation::no_lca) return 0.0;
  if (ablation == Ablation::no_bce) return 1.0;
  return alpha;
}

HeadKind TrainConfig::head_kind() const {
  return ablation == Ablation::no_label_segment ? HeadKind::cls : HeadKind::span;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (early_stop_patience < 1 || early_stop_patience > epochs)
    throw UsageError("early_stop_patience must lie in [1, epochs]");
  if (!(lr_encoder >= 0.0) || !(lr_head >= 0.0)) throw UsageError("learning rates must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0,1)");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0,1]");
  if (!(threshold > 0.0 && threshold < 1.0)) throw UsageError("threshold must lie in (0,1)");
  if (max_length < 2) throw UsageError("max_length must be >= 2");
  if (encoder.kind != "toy" && encoder.kind != "pretrained")
    throw UsageError("encoder must be 'toy' or 'pretrained'");
  if (encoder.kind == "toy" && (encoder.toy_dim < 1 || encoder.toy_window < 0))
    throw UsageError("toy encoder needs toy_dim >= 1 and toy_window >= 0");
  semeval_space_for_language(language);
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["early_stop_patience"] = early_stop_patience;
  j["lr_encoder"] = lr_encoder;
  j["lr_head"] = lr_head;
  j["dropout"] = dropout;
  j["alpha"] = alpha;
  j["seed"] = seed;
  j["ablation"] = to_string(ablation);
  j["selection_metric"] = to_string(selection_metric);
  j["threshold"] = threshold;
  j["max_length"] = max_length;
  j["language"] = language;
  j["encoder"] = encoder.kind;
  j["encoder_path"] = encoder.pretrained;
  j["toy_dim"] = encoder.toy_dim;
  j["toy_window"] = encoder.toy_window;
  j["toy_positions"] = encoder.toy_positions;
  return nlohmann::json::parse(j.dump());
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw UsageError("config must be a flat JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "early_stop_patience") c.early_stop_patience = value.get<int>();
      else if (key == "lr_encoder") c.lr_encoder = value.get<double>();
      else if (key == "lr_head") c.lr_head = value.get<double>();
      else if (key == "dropout") c.dropout = value.get<double>();
      else if (key == "alpha") c.alpha = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "ablation") c.ablation = parse_ablation(value.get<std::string>());
      else if (key == "selection_metric") c.selection_metric = parse_selection_metric(value.get<std::string>());
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "max_length") c.max_length = value.get<std::size_t>();
      else if (key == "language") c.language = value.get<std::string>();
      else if (key == "encoder") c.encoder.kind = value.get<std::string>();
      else if (key == "encoder_path") c.encoder.pretrained = value.get<std::string>();
      else if (key == "toy_dim") c.encoder.toy_dim = value.get<int>();
      else if (key == "toy_window") c.encoder.toy_window = value.get<int>();
      else if (key == "toy_positions") c.encoder.toy_positions = value.get<bool>();
      else throw UsageError("unknown config key: " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad config value: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainConfig{}); }

void write_log_csv(std::ostream& out, const std::vector<LogRow>& log) {
  out << "epoch,split,loss,miF1,maF1,jacS\n";
  for (const auto& r : log)
    out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.epoch, r.split, r.loss, r.micro_f1, r.macro_f1,
                       r.jaccard);
}

SpanModel build_model(const TrainConfig& cfg, const LabelSpace& space, const std::vector<const Dataset*>& corpus) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  if (cfg.encoder.kind == "toy") {
    std::vector<std::string> words(space.surface_tokens());
    for (const Dataset* d : corpus)
      for (const auto& ex : d->examples) words.insert(words.end(), ex.tokens.begin(), ex.tokens.end());
    auto vocab = WordPieceVocab::from_words(words);
    ToyEncoderConfig tc;
    tc.vocab_size = vocab.size();
    tc.dim = cfg.encoder.toy_dim;
    tc.window = cfg.encoder.toy_window;
    tc.position_embeddings = cfg.encoder.toy_positions;
    tc.max_length = cfg.max_length;
    auto encoder = std::make_unique<ToyEncoder>(tc, rng);
    return SpanModel(space, std::move(vocab), std::move(encoder), cfg.head_kind(), rng);
  }
  const auto dir = resolve_checkpoint(cfg.encoder.pretrained.empty() ? default_encoder_id(cfg.language)
                                                                     : cfg.encoder.pretrained);
  auto vocab = WordPieceVocab::load(dir / "vocab.txt", true);
  auto encoder = TransformerEncoder::from_pretrained(dir, cfg.max_length);
  return SpanModel(space, std::move(vocab), std::move(encoder), cfg.head_kind(), rng);
}

std::vector<ProbabilityVector> predict_probs(const SpanModel& model, const Dataset& data) {
  std::vector<ProbabilityVector> out;
  out.reserve(data.size());
  for (const auto& ex : data.examples) out.push_back(model.forward(ex));
  return out;
}

std::vector<LabelVector> predict_labels(const SpanModel& model, const Dataset& data, double threshold) {
  std::vector<LabelVector> out;
  out.reserve(data.size());
  for (const auto& p : predict_probs(model, data)) out.push_back(predict(p, threshold));
  return out;
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& valid,
                  const fs::path& out_dir) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("training set is empty");
  return train(cfg, build_model(cfg, train_set.space, {&train_set}), train_set, valid, out_dir);
}

TrainResult train(const TrainConfig& cfg, SpanModel model, const Dataset& train_set, const Dataset& valid,
                  const fs::path& out_dir) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("training set is empty");
  if (valid.empty()) throw UsageError("validation set is empty");
  if (train_set.space.names() != valid.space.names() || model.space().names() != train_set.space.names())
    throw UsageError("training, validation and model label spaces differ");
  if (model.head_kind() != cfg.head_kind()) throw UsageError("model head does not match the ablation setting");

  fs::create_directories(out_dir);
  const fs::path ckpt_dir = out_dir / "checkpoint";
  const LossConfig loss_cfg{cfg.effective_alpha()};

  Adam adam;
  adam.add_group(model.encoder_parameters(), cfg.lr_encoder);
  adam.add_group(model.head_parameters(), cfg.lr_head);

  std::mt19937_64 shuffle_rng(cfg.seed + 1);
  std::mt19937_64 dropout_rng(cfg.seed + 2);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  CheckpointMeta meta;
  meta.space = model.space();
  meta.threshold = cfg.threshold;
  meta.alpha = cfg.effective_alpha();
  meta.seed = cfg.seed;
  meta.ablation = to_string(cfg.ablation);
  meta.head = model.head_kind();
  meta.max_length = cfg.max_length;
  meta.train_config = cfg.to_json();

  TrainResult result;
  double best = -std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  const auto valid_gold = valid.gold();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::vector<LabelVector> seen_gold, seen_pred;
    seen_gold.reserve(order.size());
    seen_pred.reserve(order.size());

    for (std::size_t start = 0, batch = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++batch) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<SpanModel::TrainPass> passes;
      std::vector<LabelVector> ys;
      std::vector<std::vector<double>> probs;
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train_set.examples[order[i]];
        passes.push_back(model.forward_train(ex, dropout_rng, cfg.dropout));
        ys.push_back(ex.labels);
        probs.push_back(passes.back().probs);
      }
      const auto value = joint_loss(ys, probs, loss_cfg);
      if (!std::isfinite(value.total)) {
        throw TrainingError(fmt::format("non-finite loss at epoch {}, batch {} (bce {}, lca {})", epoch, batch,
                                        value.bce_part, value.lca_part));
      }
      const auto grads = joint_gradient(ys, probs, loss_cfg);
      adam.zero_grad();
      for (std::size_t i = 0; i < passes.size(); ++i) model.backward(passes[i], grads[i]);
      adam.step();

      loss_sum += value.total * static_cast<double>(end - start);
      for (std::size_t i = 0; i < ys.size(); ++i) {
        seen_gold.push_back(ys[i]);
        seen_pred.push_back(predict(ProbabilityVector(probs[i]), cfg.threshold));
      }
    }

    const auto train_report = evaluate(seen_gold, seen_pred);
    result.log.push_back({epoch, "train", loss_sum / static_cast<double>(train_set.size()), train_report.micro_f1,
                          train_report.macro_f1, train_report.jaccard});

    const auto valid_probs = predict_probs(model, valid);
    std::vector<LabelVector> valid_pred;
    valid_pred.reserve(valid_probs.size());
    for (const auto& p : valid_probs) valid_pred.push_back(predict(p, cfg.threshold));
    const auto valid_report = evaluate(valid_gold, valid_pred);
    const double valid_loss = joint_loss(valid_gold, valid_probs, loss_cfg).total;
    result.log.push_back({epoch, "valid", valid_loss, valid_report.micro_f1, valid_report.macro_f1,
                          valid_report.jaccard});
    ++result.validation_rounds;
    result.epochs_run = epoch;

    const double score = select(valid_report, cfg.selection_metric);
    if (score > best) {
      best = score;
      since_improvement = 0;
      result.best_epoch = epoch;
      result.best_valid = valid_report;
      meta.best_epoch = epoch;
      save_checkpoint(ckpt_dir, model, meta);
    } else if (++since_improvement >= cfg.early_stop_patience) {
      break;
    }
  }

  std::ostringstream csv;
  write_log_csv(csv, result.log);
  write_file_atomic(out_dir / "train_log.csv", csv.str());
  result.checkpoint = ckpt_dir;
  return result;
}

MetricReport evaluate_checkpoint(const fs::path& checkpoint, const Dataset& data, std::optional<double> threshold) {
  auto loaded = load_checkpoint(checkpoint);
  if (loaded.meta.space.names() != data.space.names())
    throw UsageError("checkpoint label space does not match the dataset");
  return evaluate(data.gold(), predict_labels(loaded.model, data, threshold.value_or(loaded.meta.threshold)));
}

}  // namespace spanemo
