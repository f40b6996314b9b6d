#include "spanemo/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "spanemo/error.hpp"
#include "spanemo/safetensors.hpp"
#include "spanemo/toy_encoder.hpp"
#include "spanemo/transformer_encoder.hpp"

namespace spanemo {
namespace fs = std::filesystem;
namespace {

constexpr const char* kParams = "params.safetensors";
constexpr const char* kMeta = "meta.json";
constexpr const char* kVocab = "vocab.txt";

fs::path temp_name(const fs::path& path) { return path.string() + ".tmp"; }

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  const auto tmp = temp_name(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw UsageError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

void save_checkpoint(const fs::path& dir, const SpanModel& model, const CheckpointMeta& meta) {
  fs::create_directories(dir);

  safetensors::TensorMap tensors;
  for (const Param* p : model.encoder().parameters()) tensors.emplace("encoder." + p->name, p->value);
  for (const Param* p : model.head_parameters()) tensors.emplace(p->name, p->value);
  const auto params_tmp = temp_name(dir / kParams);
  safetensors::save(params_tmp, tensors, {{"format", "spanemo"}});
  fs::rename(params_tmp, dir / kParams);

  std::ostringstream vocab;
  for (const auto& piece : model.vocab().pieces()) vocab << piece << '\n';
  write_file_atomic(dir / kVocab, vocab.str());

  nlohmann::ordered_json j;
  j["format"] = "spanemo-checkpoint";
  j["version"] = 1;
  j["labels"] = {{"names", meta.space.names()}, {"surface_tokens", meta.space.surface_tokens()}};
  j["threshold"] = meta.threshold;
  j["alpha"] = meta.alpha;
  j["seed"] = meta.seed;
  j["ablation"] = meta.ablation;
  j["head"] = to_string(meta.head);
  j["best_epoch"] = meta.best_epoch;
  j["max_length"] = meta.max_length;
  j["vocab_split_punctuation"] = model.vocab().split_punctuation();
  j["encoder"] = {{"kind", model.encoder().kind()}, {"config", model.encoder().config()}};
  j["train_config"] = meta.train_config;
  write_file_atomic(dir / kMeta, j.dump(2) + "\n");
}

CheckpointMeta read_checkpoint_meta(const fs::path& dir) {
  std::ifstream in(dir / kMeta);
  if (!in) throw UsageError("not a checkpoint directory (no meta.json): " + dir.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", (dir / kMeta).string(), e.what()));
  }
  if (j.value("format", "") != "spanemo-checkpoint") throw ParseError("unrecognized checkpoint format in " + dir.string());
  CheckpointMeta meta;
  meta.space = LabelSpace(j.at("labels").at("names").get<std::vector<std::string>>(),
                          j.at("labels").at("surface_tokens").get<std::vector<std::string>>());
  meta.threshold = j.at("threshold").get<double>();
  meta.alpha = j.at("alpha").get<double>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.ablation = j.at("ablation").get<std::string>();
  meta.head = parse_head_kind(j.at("head").get<std::string>());
  meta.best_epoch = j.at("best_epoch").get<int>();
  meta.max_length = j.at("max_length").get<std::size_t>();
  meta.encoder = j.at("encoder");
  meta.train_config = j.value("train_config", nlohmann::json::object());
  meta.encoder["vocab_split_punctuation"] = j.value("vocab_split_punctuation", false);
  return meta;
}

LoadedCheckpoint load_checkpoint(const fs::path& dir) {
  auto meta = read_checkpoint_meta(dir);
  const bool split_punct = meta.encoder.value("vocab_split_punctuation", false);
  auto vocab = WordPieceVocab::load(dir / kVocab, split_punct);
  const auto kind = meta.encoder.at("kind").get<std::string>();
  const auto& cfg = meta.encoder.at("config");
  std::mt19937_64 rng(meta.seed);
  std::unique_ptr<Encoder> encoder;
  if (kind == "toy") {
    encoder = std::make_unique<ToyEncoder>(ToyEncoderConfig::from_json(cfg), rng);
  } else if (kind == "transformer") {
    encoder = std::make_unique<TransformerEncoder>(TransformerConfig::from_json(cfg), rng,
                                                   cfg.at("max_length").get<std::size_t>());
  } else {
    throw ParseError("unknown encoder kind in checkpoint: " + kind);
  }
  SpanModel model(meta.space, std::move(vocab), std::move(encoder), meta.head, rng);

  auto tensors = safetensors::load(dir / kParams);
  auto assign = [&](Param* p, const std::string& key) {
    auto it = tensors.find(key);
    if (it == tensors.end()) throw ParseError("checkpoint lacks tensor " + key);
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw ParseError(fmt::format("checkpoint tensor {} has shape {}x{}, expected {}x{}", key, it->second.rows(),
                                   it->second.cols(), p->value.rows(), p->value.cols()));
    p->value = it->second;
  };
  for (Param* p : model.encoder_parameters()) assign(p, "encoder." + p->name);
  for (Param* p : model.head_parameters()) assign(p, p->name);
  return {std::move(model), std::move(meta)};
}

}  // namespace spanemo
