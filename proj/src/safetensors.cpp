#include "spanemo/safetensors.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

#include "spanemo/error.hpp"

namespace spanemo::safetensors {
namespace {

static_assert(std::endian::native == std::endian::little, "safetensors I/O assumes a little-endian host");

double half_to_double(std::uint16_t h) {
  const std::uint32_t sign = (h >> 15) & 1u;
  const std::uint32_t exp = (h >> 10) & 0x1Fu;
  const std::uint32_t frac = h & 0x3FFu;
  double v;
  if (exp == 0)
    v = std::ldexp(static_cast<double>(frac), -24);
  else if (exp == 31)
    v = frac ? std::numeric_limits<double>::quiet_NaN() : std::numeric_limits<double>::infinity();
  else
    v = std::ldexp(static_cast<double>(frac | 0x400u), static_cast<int>(exp) - 25);
  return sign ? -v : v;
}

double bf16_to_double(std::uint16_t b) {
  std::uint32_t bits = static_cast<std::uint32_t>(b) << 16;
  float f;
  std::memcpy(&f, &bits, sizeof f);
  return f;
}

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "F64") return 8;
  if (dtype == "F32") return 4;
  if (dtype == "F16" || dtype == "BF16") return 2;
  throw ParseError("unsupported safetensors dtype " + dtype);
}

}  // namespace

TensorMap load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in || header_len > (1ull << 30)) throw ParseError(path.string() + ": bad safetensors header");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError(path.string() + ": truncated safetensors header");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto meta = nlohmann::json::parse(header);
  TensorMap out;
  for (const auto& [name, info] : meta.items()) {
    if (name == "__metadata__") continue;
    const auto dtype = info.at("dtype").get<std::string>();
    const auto shape = info.at("shape").get<std::vector<std::size_t>>();
    const auto offsets = info.at("data_offsets").get<std::vector<std::size_t>>();
    if (shape.size() > 2) throw ParseError(path.string() + ": tensor " + name + " has rank > 2");
    const std::size_t rows = shape.size() == 2 ? shape[0] : 1;
    const std::size_t cols = shape.empty() ? 1 : shape.back();
    const std::size_t width = dtype_size(dtype);
    if (offsets.size() != 2 || offsets[1] > data.size() || offsets[1] - offsets[0] != rows * cols * width)
      throw ParseError(path.string() + ": tensor " + name + " has inconsistent offsets");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    const char* base = data.data() + offsets[0];
    double* dst = m.data();
    for (std::size_t i = 0; i < rows * cols; ++i) {
      const char* p = base + i * width;
      if (dtype == "F64") {
        std::memcpy(&dst[i], p, 8);
      } else if (dtype == "F32") {
        float f;
        std::memcpy(&f, p, 4);
        dst[i] = f;
      } else {
        std::uint16_t h;
        std::memcpy(&h, p, 2);
        dst[i] = dtype == "F16" ? half_to_double(h) : bf16_to_double(h);
      }
    }
    out.emplace(name, std::move(m));
  }
  return out;
}

void save(const std::filesystem::path& path, const TensorMap& tensors,
          const std::map<std::string, std::string>& metadata) {
  nlohmann::ordered_json header;
  if (!metadata.empty()) header["__metadata__"] = metadata;
  std::size_t offset = 0;
  for (const auto& [name, m] : tensors) {
    std::vector<std::size_t> shape;
    if (m.rows() == 1)
      shape = {static_cast<std::size_t>(m.cols())};
    else
      shape = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    const std::size_t bytes = static_cast<std::size_t>(m.size()) * 8;
    header[name] = {{"dtype", "F64"}, {"shape", shape}, {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string h = header.dump();
  while (h.size() % 8 != 0) h.push_back(' ');
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  const std::uint64_t len = h.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& [name, m] : tensors)
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * 8));
  if (!out) throw UsageError("failed writing " + path.string());
}

}  // namespace spanemo::safetensors
