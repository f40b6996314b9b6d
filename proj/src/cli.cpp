#include "spanemo/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "spanemo/analysis.hpp"
#include "spanemo/checkpoint.hpp"
#include "spanemo/error.hpp"
#include "spanemo/trainer.hpp"

namespace spanemo::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw UsageError("not a number: " + item);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list: " + text);
  return out;
}

// Train flags are applied on top of --config only when given explicitly.
struct ConfigFlags {
  TrainConfig values;
  std::string ablation = "none";
  std::string selection = "jacS";
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> setters;

  void add(CLI::App* app) {
    auto bind = [&](CLI::Option* opt, std::function<void(TrainConfig&)> fn) { setters.emplace_back(opt, std::move(fn)); };
    auto& v = values;
    bind(app->add_option("--batch-size", v.batch_size), [this](TrainConfig& c) { c.batch_size = values.batch_size; });
    bind(app->add_option("--epochs", v.epochs), [this](TrainConfig& c) { c.epochs = values.epochs; });
    bind(app->add_option("--patience", v.early_stop_patience),
         [this](TrainConfig& c) { c.early_stop_patience = values.early_stop_patience; });
    bind(app->add_option("--lr-encoder", v.lr_encoder), [this](TrainConfig& c) { c.lr_encoder = values.lr_encoder; });
    bind(app->add_option("--lr-head", v.lr_head), [this](TrainConfig& c) { c.lr_head = values.lr_head; });
    bind(app->add_option("--dropout", v.dropout), [this](TrainConfig& c) { c.dropout = values.dropout; });
    bind(app->add_option("--alpha", v.alpha), [this](TrainConfig& c) { c.alpha = values.alpha; });
    bind(app->add_option("--seed", v.seed), [this](TrainConfig& c) { c.seed = values.seed; });
    bind(app->add_option("--ablation", ablation, "none | no_lca | no_bce | no_label_segment"),
         [this](TrainConfig& c) { c.ablation = parse_ablation(ablation); });
    bind(app->add_option("--selection-metric", selection, "jacS | miF1 | maF1"),
         [this](TrainConfig& c) { c.selection_metric = parse_selection_metric(selection); });
    bind(app->add_option("--threshold", v.threshold), [this](TrainConfig& c) { c.threshold = values.threshold; });
    bind(app->add_option("--max-length", v.max_length), [this](TrainConfig& c) { c.max_length = values.max_length; });
    bind(app->add_option("--language", v.language, "english | arabic | spanish"),
         [this](TrainConfig& c) { c.language = values.language; });
    bind(app->add_option("--encoder", v.encoder.kind, "toy | pretrained"),
         [this](TrainConfig& c) { c.encoder.kind = values.encoder.kind; });
    bind(app->add_option("--encoder-path", v.encoder.pretrained, "checkpoint directory or registry id"),
         [this](TrainConfig& c) { c.encoder.pretrained = values.encoder.pretrained; });
    bind(app->add_option("--toy-dim", v.encoder.toy_dim), [this](TrainConfig& c) { c.encoder.toy_dim = values.encoder.toy_dim; });
    bind(app->add_option("--toy-window", v.encoder.toy_window),
         [this](TrainConfig& c) { c.encoder.toy_window = values.encoder.toy_window; });
    bind(app->add_option("--toy-positions", v.encoder.toy_positions),
         [this](TrainConfig& c) { c.encoder.toy_positions = values.encoder.toy_positions; });
    app->add_option("--config", config_path, "flat JSON config; explicit flags win")->check(CLI::ExistingFile);
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("cannot parse " + config_path + ": " + e.what());
      }
      cfg = TrainConfig::from_json(j, cfg);
    }
    for (const auto& [opt, fn] : setters)
      if (opt->count() > 0) fn(cfg);
    cfg.validate();
    return cfg;
  }
};

struct Options {
  std::vector<std::string> tsv;
  std::string train, valid, out, checkpoint, language = "english", id, strata, grid;
  double threshold = 0.5;
  std::size_t k = 10;
  long index = -1;
  ConfigFlags config;
};

Dataset load(const std::string& path, const LabelSpace& space) {
  return load_ec_tsv(path, space, split_from_filename(path));
}

int cmd_validate(const Options& o, std::ostream& out) {
  const auto space = semeval_space_for_language(o.language);
  std::vector<Dataset> data;
  for (const auto& path : o.tsv) data.push_back(load(path, space));
  const auto stats = compute_stats(data);
  const auto text = format_stats(stats);
  out << text;
  if (!o.out.empty()) {
    fs::create_directories(o.out);
    write_text(fs::path(o.out) / "stats.txt", text);
    for (std::size_t i = 0; i < data.size(); ++i) {
      std::ostringstream os;
      write_jsonl(os, data[i]);
      write_text(fs::path(o.out) / (fs::path(o.tsv[i]).stem().string() + ".jsonl"), os.str());
    }
  }
  return kExitOk;
}

void echo_config(const fs::path& dir, const TrainConfig& cfg) {
  fs::create_directories(dir);
  write_text(dir / "effective_config.json", cfg.to_json().dump(2) + "\n");
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto cfg = o.config.resolve();
  const auto space = semeval_space_for_language(cfg.language);
  const auto train_set = load(o.train, space);
  const auto valid_set = load(o.valid, space);
  echo_config(o.out, cfg);
  const auto result = train(cfg, train_set, valid_set, o.out);
  out << fmt::format("best epoch {} of {} (ablation {})\n", result.best_epoch, result.epochs_run,
                     to_string(cfg.ablation));
  out << format_reports({{"valid", result.best_valid}});
  out << "checkpoint: " << result.checkpoint.string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, bool threshold_given) {
  const auto loaded = load_checkpoint(o.checkpoint);
  const double threshold = threshold_given ? o.threshold : loaded.meta.threshold;
  const auto data = load(o.tsv.front(), loaded.meta.space);
  const auto gold = data.gold();
  const auto pred = predict_labels(loaded.model, data, threshold);

  std::vector<std::pair<std::string, MetricReport>> blocks{{"overall", evaluate(gold, pred)}};
  nlohmann::ordered_json j;
  j["threshold"] = threshold;
  j["overall"] = to_json(blocks.front().second, data.space);
  j["strata"] = nlohmann::ordered_json::object();
  std::string notes;
  if (!o.strata.empty()) {
    for (double kd : parse_number_list(o.strata)) {
      if (kd < 1 || kd != static_cast<double>(static_cast<std::size_t>(kd)))
        throw UsageError(fmt::format("stratum {} is not a positive integer", kd));
      const auto k = static_cast<std::size_t>(kd);
      const auto name = fmt::format("gold>={}", k);
      try {
        blocks.emplace_back(name, stratified_eval(gold, pred, k));
        j["strata"][name] = to_json(blocks.back().second, data.space);
      } catch (const EmptyStratumError&) {
        j["strata"][name] = nullptr;
        notes += fmt::format("{}: no examples\n", name);
      }
    }
  }
  const auto text = format_reports(blocks) + notes;
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "report.json", j.dump(2) + "\n");
  write_text(fs::path(o.out) / "report.txt", text);
  out << text;
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, bool threshold_given) {
  const auto loaded = load_checkpoint(o.checkpoint);
  const double threshold = threshold_given ? o.threshold : loaded.meta.threshold;
  const auto data = load(o.tsv.front(), loaded.meta.space);
  const auto pred = predict_labels(loaded.model, data, threshold);
  std::ostringstream os;
  write_ec_tsv(os, data, pred);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "predictions.tsv", os.str());
  out << fmt::format("{} predictions written to {}\n", pred.size(), (fs::path(o.out) / "predictions.tsv").string());
  return kExitOk;
}

int cmd_words(const Options& o, std::ostream& out) {
  const auto loaded = load_checkpoint(o.checkpoint);
  const auto data = load(o.tsv.front(), loaded.meta.space);
  const auto table = word_associations(loaded.model, data, o.k);
  write_associations(o.out, table);
  for (std::size_t c = 0; c < table.labels.size(); ++c) {
    out << table.labels[c] << ':';
    for (const auto& s : table.rows[c]) out << ' ' << s.word;
    out << '\n';
  }
  return kExitOk;
}

int cmd_heatmap(const Options& o, std::ostream& out) {
  const auto loaded = load_checkpoint(o.checkpoint);
  const auto data = load(o.tsv.front(), loaded.meta.space);
  const Example* ex = nullptr;
  if (!o.id.empty()) {
    for (const auto& e : data.examples)
      if (e.id == o.id) ex = &e;
    if (ex == nullptr) throw UsageError("no example with id " + o.id);
  } else {
    const auto i = static_cast<std::size_t>(std::max(0L, o.index));
    if (i >= data.size()) throw UsageError(fmt::format("index {} out of range ({} examples)", i, data.size()));
    ex = &data.examples[i];
  }
  const auto matrix = sentence_heatmap(loaded.model, *ex);
  write_similarity(o.out, "heatmap", matrix);
  out << similarity_csv(matrix);
  return kExitOk;
}

int cmd_correlations(const Options& o, std::ostream& out) {
  if (o.checkpoint.empty()) {
    const auto data = load(o.tsv.front(), semeval_space_for_language(o.language));
    const auto gold = label_correlations(data.gold(), data.space, CorrelationSource::gold);
    write_correlations(o.out, "correlations_gold", gold);
    out << correlation_csv(gold);
    return kExitOk;
  }
  const auto loaded = load_checkpoint(o.checkpoint);
  const auto data = load(o.tsv.front(), loaded.meta.space);
  const auto gold = label_correlations(data.gold(), data.space, CorrelationSource::gold);
  const auto pred = label_correlations(predict_labels(loaded.model, data, loaded.meta.threshold), data.space,
                                       CorrelationSource::predicted);
  write_correlations(o.out, "correlations_gold", gold);
  write_correlations(o.out, "correlations_predicted", pred);
  out << "gold\n" << correlation_csv(gold) << "predicted\n" << correlation_csv(pred);
  return kExitOk;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto cfg = o.config.resolve();
  const auto grid = o.grid.empty() ? default_alpha_grid() : parse_number_list(o.grid);
  const auto space = semeval_space_for_language(cfg.language);
  const auto train_set = load(o.train, space);
  const auto valid_set = load(o.valid, space);
  echo_config(o.out, cfg);
  const auto rows = alpha_sweep(cfg, grid, train_set, valid_set, o.out);
  write_sweep(o.out, rows);
  out << sweep_csv(rows);
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok; }) ? kExitOk : kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-label emotion classification with label-segment span prediction", "spanemo"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate-data", "check E-c TSV files and print label statistics");
  validate->add_option("--tsv", o.tsv, "E-c TSV file (repeatable)")->required()->check(CLI::ExistingFile);
  validate->add_option("--language", o.language, "english | arabic | spanish");
  validate->add_option("--out", o.out, "also write stats.txt and one JSONL file per input here");

  auto* train_cmd = app.add_subcommand("train", "fine-tune a model and keep the best checkpoint");
  train_cmd->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--valid", o.valid)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", o.out)->required();
  o.config.add(train_cmd);

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a labelled file");
  eval->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingDirectory);
  eval->add_option("--tsv", o.tsv)->required()->check(CLI::ExistingFile)->expected(1);
  eval->add_option("--out", o.out)->required();
  auto* eval_threshold = eval->add_option("--threshold", o.threshold, "defaults to the checkpoint's");
  eval->add_option("--strata", o.strata, "comma-separated minimum gold label counts, e.g. 1,2,3");

  auto* predict_cmd = app.add_subcommand("predict", "write predictions in the E-c TSV layout");
  predict_cmd->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingDirectory);
  predict_cmd->add_option("--tsv", o.tsv)->required()->check(CLI::ExistingFile)->expected(1);
  predict_cmd->add_option("--out", o.out)->required();
  auto* predict_threshold = predict_cmd->add_option("--threshold", o.threshold);

  auto* words = app.add_subcommand("analyze-words", "top-k words per emotion by hidden-state similarity");
  words->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingDirectory);
  words->add_option("--tsv", o.tsv)->required()->check(CLI::ExistingFile)->expected(1);
  words->add_option("--out", o.out)->required();
  words->add_option("--k", o.k, "words per emotion")->check(CLI::PositiveNumber);

  auto* heatmap = app.add_subcommand("analyze-heatmap", "label/word similarity matrix for one example");
  heatmap->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingDirectory);
  heatmap->add_option("--tsv", o.tsv)->required()->check(CLI::ExistingFile)->expected(1);
  heatmap->add_option("--out", o.out)->required();
  auto* id_opt = heatmap->add_option("--id", o.id, "example id");
  heatmap->add_option("--index", o.index, "0-based row index")->excludes(id_opt)->check(CLI::NonNegativeNumber);

  auto* corr = app.add_subcommand("analyze-correlations", "Pearson correlations between label columns");
  corr->add_option("--tsv", o.tsv)->required()->check(CLI::ExistingFile)->expected(1);
  corr->add_option("--out", o.out)->required();
  corr->add_option("--checkpoint", o.checkpoint, "also correlate this model's predictions")
      ->check(CLI::ExistingDirectory);
  corr->add_option("--language", o.language, "english | arabic | spanish (gold only)");

  auto* sweep = app.add_subcommand("sweep-alpha", "one training run per alpha value");
  sweep->add_option("--train", o.train)->required()->check(CLI::ExistingFile);
  sweep->add_option("--valid", o.valid)->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", o.out)->required();
  sweep->add_option("--grid", o.grid, "comma-separated alpha values (default 0,0.1,...,1)");
  o.config.add(sweep);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval->parsed()) return cmd_eval(o, out, eval_threshold->count() > 0);
    if (predict_cmd->parsed()) return cmd_predict(o, out, predict_threshold->count() > 0);
    if (words->parsed()) return cmd_words(o, out);
    if (heatmap->parsed()) return cmd_heatmap(o, out);
    if (corr->parsed()) return cmd_correlations(o, out);
    if (sweep->parsed()) return cmd_sweep(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace spanemo::cli
