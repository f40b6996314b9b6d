#include "doctest.h"

#include <fstream>
#include <sstream>

#include "spanemo/checkpoint.hpp"
#include "spanemo/error.hpp"
#include "spanemo/trainer.hpp"
#include "support.hpp"

using namespace spanemo;
using namespace spanemo::testing;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.early_stop_patience = 2;
  cfg.batch_size = 5;
  cfg.lr_encoder = 1e-2;
  cfg.lr_head = 1e-2;
  cfg.encoder.toy_dim = 8;
  return cfg;
}

Dataset fixture(const char* name, Split split) {
  return load_ec_tsv(data_dir() / name, default_semeval_space(), split);
}

}  // namespace

TEST_CASE("config JSON round trip and validation") {
  TrainConfig cfg;
  cfg.alpha = 0.35;
  cfg.ablation = Ablation::no_bce;
  cfg.selection_metric = SelectionMetric::macro_f1;
  cfg.encoder.toy_window = 3;
  const auto back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.effective_alpha() == 1.0);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"learning_rate", 1}}), UsageError);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json{{"epochs", "many"}}), UsageError);

  auto bad = TrainConfig{};
  bad.early_stop_patience = 30;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = TrainConfig{};
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = TrainConfig{};
  bad.lr_head = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("ablations map to loss weights and heads") {
  TrainConfig cfg;
  cfg.alpha = 0.3;
  cfg.ablation = Ablation::no_lca;
  CHECK(cfg.effective_alpha() == 0.0);
  cfg.ablation = Ablation::no_label_segment;
  CHECK(cfg.effective_alpha() == 0.3);
  CHECK(cfg.head_kind() == HeadKind::cls);
  CHECK(parse_ablation("no_bce") == Ablation::no_bce);
  CHECK_THROWS_AS(parse_ablation("no_everything"), UsageError);
  CHECK(parse_selection_metric("miF1") == SelectionMetric::micro_f1);
}

TEST_CASE("a frozen model with patience 1 stops after two validation rounds") {
  auto cfg = small_config();
  cfg.epochs = 6;
  cfg.early_stop_patience = 1;
  cfg.lr_encoder = 0.0;
  cfg.lr_head = 0.0;
  TempDir dir("frozen");
  const auto r = train(cfg, fixture("fixture-train.txt", Split::train), fixture("fixture-dev.txt", Split::valid),
                       dir.path());
  CHECK(r.validation_rounds == 2);
  CHECK(r.best_epoch == 1);
  CHECK(r.log.size() == 4);
}

TEST_CASE("training never runs past best epoch + patience") {
  Gen gen(31);
  const auto tr = fixture("fixture-train.txt", Split::train);
  const auto va = fixture("fixture-dev.txt", Split::valid);
  for (int i = 0; i < 4; ++i) {
    auto cfg = small_config();
    cfg.epochs = 8;
    cfg.early_stop_patience = gen.integer(1, 3);
    cfg.seed = static_cast<std::uint64_t>(gen.integer(1, 1000));
    TempDir dir("patience");
    const auto r = train(cfg, tr, va, dir.path());
    CHECK(r.epochs_run <= r.best_epoch + cfg.early_stop_patience);
    CHECK(std::filesystem::exists(r.checkpoint / "params.safetensors"));
    CHECK(read_checkpoint_meta(r.checkpoint).best_epoch == r.best_epoch);
  }
}

TEST_CASE("log format and determinism") {
  const auto tr = fixture("fixture-train.txt", Split::train);
  const auto va = fixture("fixture-dev.txt", Split::valid);
  TempDir a("log_a"), b("log_b");
  train(small_config(), tr, va, a.path());
  train(small_config(), tr, va, b.path());
  const auto log = slurp(a.path() / "train_log.csv");
  CHECK(log == slurp(b.path() / "train_log.csv"));
  CHECK(log.rfind("epoch,split,loss,miF1,maF1,jacS\n1,train,", 0) == 0);
  CHECK(log.find("\n1,valid,") != std::string::npos);
}

TEST_CASE("input errors") {
  const auto tr = fixture("fixture-train.txt", Split::train);
  TempDir dir("errors");
  Dataset empty;
  CHECK_THROWS_AS(train(small_config(), empty, tr, dir.path()), UsageError);
  Dataset other = tr;
  other.space = LabelSpace({"x", "y"});
  CHECK_THROWS_AS(train(small_config(), tr, other, dir.path()), UsageError);

  auto model = build_model(small_config(), tr.space, {&tr});
  dynamic_cast<ToyEncoder&>(model.encoder()).bias().value(0, 0) = std::nan("");
  try {
    train(small_config(), std::move(model), tr, tr, dir.path() / "nan");
    FAIL("expected a training error");
  } catch (const TrainingError& e) {
    CHECK(std::string(e.what()).find("epoch 1, batch 0") != std::string::npos);
  }
}

TEST_CASE("toy vocabulary covers the corpus and label tokens") {
  const auto tr = fixture("fixture-train.txt", Split::train);
  const auto model = build_model(small_config(), tr.space, {&tr});
  for (const auto& ex : tr.examples)
    for (const auto& t : ex.tokens) CHECK(model.vocab().contains(t));
  for (const auto& s : tr.space.surface_tokens()) CHECK(model.vocab().contains(s));
}

TEST_CASE("a zero-head checkpoint scores the neutral fraction") {
  const auto tr = fixture("fixture-train.txt", Split::train);
  auto model = build_model(small_config(), tr.space, {&tr});
  model.zero_head();
  TempDir dir("zero");
  CheckpointMeta meta;
  meta.space = tr.space;
  save_checkpoint(dir.path() / "ck", model, meta);
  std::size_t neutral = 0;
  for (const auto& ex : tr.examples) neutral += ex.labels.empty_set() ? 1 : 0;
  const auto r = evaluate_checkpoint(dir.path() / "ck", tr);
  CHECK(r.jaccard == doctest::Approx(static_cast<double>(neutral) / static_cast<double>(tr.size())));
  CHECK(r.micro_f1 == 0.0);
  CHECK(evaluate_checkpoint(dir.path() / "ck", tr, 0.4).false_negatives == 0);
}
