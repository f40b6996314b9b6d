#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "spanemo/tensor.hpp"

namespace spanemo::safetensors {

/// Tensors are read into double precision regardless of the stored dtype
/// (F64, F32, F16, BF16). Rank-1 tensors load as 1×n, rank-2 as given.
/// Higher ranks are rejected.
using TensorMap = std::map<std::string, Matrix>;

TensorMap load(const std::filesystem::path& path);

/// Writes F64 little-endian tensors, names in sorted order. 1×n matrices are
/// stored as rank-1, matching how they load.
void save(const std::filesystem::path& path, const TensorMap& tensors,
          const std::map<std::string, std::string>& metadata = {});

}  // namespace spanemo::safetensors
