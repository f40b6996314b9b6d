#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "spanemo/span_model.hpp"

namespace spanemo {

/// Checkpoint directory layout:
///   params.safetensors  every parameter, F64, "encoder." / "head." prefixes
///   meta.json           label space, threshold, alpha, seed, ablation, config
///   vocab.txt           the tokenizer vocabulary
struct CheckpointMeta {
  LabelSpace space = default_semeval_space();
  double threshold = 0.5;
  double alpha = 0.2;
  std::uint64_t seed = 0;
  std::string ablation = "none";
  HeadKind head = HeadKind::span;
  int best_epoch = 0;
  std::size_t max_length = 128;
  nlohmann::json train_config = nlohmann::json::object();
  nlohmann::json encoder = nlohmann::json::object();  // {"kind":..., "config":...}
};

/// Every file is written to a temporary name and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const SpanModel& model,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  SpanModel model;
  CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& dir);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace spanemo
