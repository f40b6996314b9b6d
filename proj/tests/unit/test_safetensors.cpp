#include "doctest.h"

#include <cstring>
#include <fstream>

#include "json.hpp"
#include "spanemo/safetensors.hpp"
#include "support.hpp"

using namespace spanemo;

TEST_CASE("F64 round trip preserves every bit") {
  testing::Gen gen(5);
  safetensors::TensorMap tensors;
  tensors["b.weight"] = gen.matrix(3, 4);
  tensors["a.bias"] = gen.matrix(1, 5);
  tensors["c.scalar"] = gen.matrix(1, 1);
  testing::TempDir dir("st");
  const auto path = dir.path() / "x.safetensors";
  safetensors::save(path, tensors, {{"format", "test"}});
  const auto back = safetensors::load(path);
  REQUIRE(back.size() == 3);
  for (const auto& [name, m] : tensors) {
    REQUIRE(back.count(name) == 1);
    CHECK(back.at(name).rows() == m.rows());
    CHECK(back.at(name).cols() == m.cols());
    CHECK(back.at(name) == m);
  }
}

TEST_CASE("reads F32 files written by other tools") {
  testing::TempDir dir("st32");
  const auto path = dir.path() / "f32.safetensors";
  const float values[6] = {1.5f, -2.0f, 0.25f, 3.0f, 4.0f, -0.5f};
  nlohmann::json header = {{"w", {{"dtype", "F32"}, {"shape", {2, 3}}, {"data_offsets", {0, 24}}}},
                           {"v", {{"dtype", "F32"}, {"shape", {2}}, {"data_offsets", {0, 8}}}}};
  std::string h = header.dump();
  {
    std::ofstream out(path, std::ios::binary);
    const std::uint64_t n = h.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    out << h;
    out.write(reinterpret_cast<const char*>(values), sizeof(values));
  }
  const auto t = safetensors::load(path);
  CHECK(t.at("w")(1, 2) == -0.5);
  CHECK(t.at("w")(0, 1) == -2.0);
  CHECK(t.at("v").rows() == 1);
  CHECK(t.at("v")(0, 1) == -2.0);
}

TEST_CASE("truncated files are rejected") {
  testing::TempDir dir("stbad");
  const auto path = dir.path() / "bad.safetensors";
  std::ofstream(path, std::ios::binary) << "abc";
  CHECK_THROWS(safetensors::load(path));
}
