#include "spanemo/figures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "spanemo/error.hpp"

namespace spanemo::figures {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

const Rgb kUndefined{200, 200, 200};
const std::array<Rgb, 5> kViridis{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
const std::array<Rgb, 4> kPalette{{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}}};

Rgb colormap(double v, double vmin, double vmax) {
  if (std::isnan(v)) return kUndefined;
  double t = vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.5;
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(kViridis.size() - 1);
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(t), kViridis.size() - 2);
  const double f = t - static_cast<double>(i);
  Rgb out;
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<std::uint8_t>(std::lround(kViridis[i][c] * (1 - f) + kViridis[i + 1][c] * f));
  return out;
}

std::string hex(const Rgb& c) { return fmt::format("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]); }

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

void put_chunk(std::ofstream& out, const char* type, const std::string& data) {
  const auto len = static_cast<std::uint32_t>(data.size());
  const unsigned char be[4] = {static_cast<unsigned char>(len >> 24), static_cast<unsigned char>(len >> 16),
                               static_cast<unsigned char>(len >> 8), static_cast<unsigned char>(len)};
  out.write(reinterpret_cast<const char*>(be), 4);
  out.write(type, 4);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  const unsigned char cb[4] = {static_cast<unsigned char>(crc >> 24), static_cast<unsigned char>(crc >> 16),
                               static_cast<unsigned char>(crc >> 8), static_cast<unsigned char>(crc)};
  out.write(reinterpret_cast<const char*>(cb), 4);
}

void be32(std::string& s, std::uint32_t v) {
  s.push_back(static_cast<char>(v >> 24));
  s.push_back(static_cast<char>(v >> 16));
  s.push_back(static_cast<char>(v >> 8));
  s.push_back(static_cast<char>(v));
}

struct Canvas {
  int width, height;
  std::vector<std::uint8_t> rgb;
  Canvas(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w * h * 3), 255) {}
  void set(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = &rgb[static_cast<std::size_t>((y * width + x) * 3)];
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  void fill(int x0, int y0, int w, int h, const Rgb& c) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) set(x, y, c);
  }
  void line(int x0, int y0, int x1, int y1, const Rgb& c) {
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }
};

struct Range {
  double lo, hi;
};

Range data_range(const LineChart& chart, bool x_axis) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : chart.series)
    for (double v : x_axis ? s.x : s.y)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) return {0.0, 1.0};
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

}  // namespace

std::string heatmap_svg(const Heatmap& map) {
  const int cell = 44, left = 120, top = 40, bottom = 110;
  const int rows = static_cast<int>(map.values.rows()), cols = static_cast<int>(map.values.cols());
  const int width = left + cols * cell + 20, height = top + rows * cell + bottom;
  std::ostringstream os;
  os << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)",
                    width, height)
     << '\n';
  os << fmt::format(R"(<text x="{}" y="20" font-size="14">{}</text>)", left, escape(map.title)) << '\n';
  for (int r = 0; r < rows; ++r) {
    const std::string label = r < static_cast<int>(map.row_labels.size()) ? map.row_labels[static_cast<std::size_t>(r)] : "";
    os << fmt::format(R"(<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{}</text>)", left - 6,
                      top + r * cell + cell / 2, escape(label))
       << '\n';
    for (int c = 0; c < cols; ++c) {
      const double v = map.values(r, c);
      const auto color = colormap(v, map.vmin, map.vmax);
      os << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="{}" stroke="white"/>)", left + c * cell,
                        top + r * cell, cell, cell, hex(color))
         << '\n';
      const bool light = !std::isnan(v) && colormap(v, map.vmin, map.vmax)[1] > 150;
      os << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" fill="{}">{}</text>)",
                        left + c * cell + cell / 2, top + r * cell + cell / 2, light || std::isnan(v) ? "black" : "white",
                        std::isnan(v) ? std::string("n/a") : fmt::format("{:.2f}", v))
         << '\n';
    }
  }
  for (int c = 0; c < cols; ++c) {
    const std::string label = c < static_cast<int>(map.col_labels.size()) ? map.col_labels[static_cast<std::size_t>(c)] : "";
    const int x = left + c * cell + cell / 2, y = top + rows * cell + 8;
    os << fmt::format(R"svg(<text x="{}" y="{}" text-anchor="start" transform="rotate(60 {} {})">{}</text>)svg", x, y, x, y,
                      escape(label))
       << '\n';
  }
  os << "</svg>\n";
  return os.str();
}

std::string line_chart_svg(const LineChart& chart) {
  const int width = 560, height = 360, left = 60, right = 120, top = 40, bottom = 50;
  const int pw = width - left - right, ph = height - top - bottom;
  const auto xr = data_range(chart, true), yr = data_range(chart, false);
  auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return top + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };
  std::ostringstream os;
  os << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="11">)",
                    width, height)
     << '\n';
  os << fmt::format(R"(<text x="{}" y="20" font-size="14">{}</text>)", left, escape(chart.title)) << '\n';
  os << fmt::format(R"(<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>)", left, top, pw, ph)
     << '\n';
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4.0, yv = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    os << fmt::format(R"(<text x="{:.1f}" y="{}" text-anchor="middle">{:.2f}</text>)", px(xv), top + ph + 16, xv) << '\n';
    os << fmt::format(R"(<text x="{}" y="{:.1f}" text-anchor="end" dominant-baseline="middle">{:.3f}</text>)", left - 4,
                      py(yv), yv)
       << '\n';
  }
  os << fmt::format(R"(<text x="{}" y="{}" text-anchor="middle">{}</text>)", left + pw / 2, height - 10,
                    escape(chart.x_label))
     << '\n';
  os << fmt::format(R"svg(<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>)svg", top + ph / 2,
                    top + ph / 2, escape(chart.y_label))
     << '\n';
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const auto color = hex(kPalette[s % kPalette.size()]);
    std::string points;
    for (std::size_t i = 0; i < series.x.size() && i < series.y.size(); ++i) {
      if (!std::isfinite(series.y[i])) continue;
      points += fmt::format("{:.1f},{:.1f} ", px(series.x[i]), py(series.y[i]));
    }
    os << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>)", color, points) << '\n';
    const int ly = top + 10 + static_cast<int>(s) * 18;
    os << fmt::format(R"(<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>)", left + pw + 10, ly,
                      left + pw + 30, ly, color)
       << '\n';
    os << fmt::format(R"(<text x="{}" y="{}" dominant-baseline="middle">{}</text>)", left + pw + 34, ly,
                      escape(series.name))
       << '\n';
  }
  os << "</svg>\n";
  return os.str();
}

void write_png(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width * height * 3))
    throw UsageError("png buffer does not match its dimensions");
  std::string raw;
  raw.reserve(static_cast<std::size_t>(height * (width * 3 + 1)));
  for (int y = 0; y < height; ++y) {
    raw.push_back('\0');  // filter: none
    raw.append(reinterpret_cast<const char*>(&rgb[static_cast<std::size_t>(y * width * 3)]),
               static_cast<std::size_t>(width * 3));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string packed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(packed.data()), &bound, reinterpret_cast<const Bytef*>(raw.data()),
                static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION) != Z_OK)
    throw UsageError("png compression failed");
  packed.resize(bound);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);
  std::string ihdr;
  be32(ihdr, static_cast<std::uint32_t>(width));
  be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr += std::string{'\x08', '\x02', '\0', '\0', '\0'};  // 8-bit RGB
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", "");
}

void write_heatmap_png(const std::filesystem::path& path, const Heatmap& map, int cell) {
  const int rows = static_cast<int>(map.values.rows()), cols = static_cast<int>(map.values.cols());
  Canvas canvas(std::max(1, cols * cell), std::max(1, rows * cell));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = map.values(r, c);
      canvas.fill(c * cell, r * cell, cell, cell, colormap(v, map.vmin, map.vmax));
      if (std::isnan(v)) canvas.line(c * cell, r * cell, c * cell + cell - 1, r * cell + cell - 1, {120, 120, 120});
    }
  for (int r = 1; r < rows; ++r) canvas.fill(0, r * cell, canvas.width, 1, {255, 255, 255});
  for (int c = 1; c < cols; ++c) canvas.fill(c * cell, 0, 1, canvas.height, {255, 255, 255});
  write_png(path, canvas.width, canvas.height, canvas.rgb);
}

void write_line_chart_png(const std::filesystem::path& path, const LineChart& chart, int width, int height) {
  Canvas canvas(width, height);
  const int margin = 20;
  const int pw = width - 2 * margin, ph = height - 2 * margin;
  const auto xr = data_range(chart, true), yr = data_range(chart, false);
  auto px = [&](double x) { return margin + static_cast<int>(std::lround((x - xr.lo) / (xr.hi - xr.lo) * pw)); };
  auto py = [&](double y) { return margin + ph - static_cast<int>(std::lround((y - yr.lo) / (yr.hi - yr.lo) * ph)); };
  const Rgb black{0, 0, 0};
  canvas.line(margin, margin, margin, margin + ph, black);
  canvas.line(margin, margin + ph, margin + pw, margin + ph, black);
  for (std::size_t s = 0; s < chart.series.size(); ++s) {
    const auto& series = chart.series[s];
    const auto color = kPalette[s % kPalette.size()];
    int prev_x = -1, prev_y = -1;
    for (std::size_t i = 0; i < series.x.size() && i < series.y.size(); ++i) {
      if (!std::isfinite(series.y[i])) continue;
      const int x = px(series.x[i]), y = py(series.y[i]);
      if (prev_x >= 0) canvas.line(prev_x, prev_y, x, y, color);
      canvas.fill(x - 2, y - 2, 5, 5, color);
      prev_x = x;
      prev_y = y;
    }
  }
  write_png(path, width, height, canvas.rgb);
}

}  // namespace spanemo::figures
