#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spanemo/tensor.hpp"

namespace spanemo::figures {

struct Heatmap {
  std::string title;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Matrix values;  // NaN cells are drawn as "undefined"
  double vmin = -1.0;
  double vmax = 1.0;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

std::string heatmap_svg(const Heatmap& map);
std::string line_chart_svg(const LineChart& chart);

/// Raster versions without text, for quick viewing.
void write_heatmap_png(const std::filesystem::path& path, const Heatmap& map, int cell = 24);
void write_line_chart_png(const std::filesystem::path& path, const LineChart& chart,
                          int width = 480, int height = 320);

/// 8-bit RGB, row-major, no interlace.
void write_png(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& rgb);

}  // namespace spanemo::figures
