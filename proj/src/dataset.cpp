#include "spanemo/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "spanemo/error.hpp"
#include "spanemo/tweet_normalizer.hpp"

namespace spanemo {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    if (pos == std::string::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cols;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \r\n");
  return s.substr(b, e - b + 1);
}

void check_header(const std::vector<std::string>& header, const LabelSpace& space,
                  const std::string& source) {
  if (header.size() < 2 || trim(header[0]) != "ID" || trim(header[1]) != "Tweet")
    throw SchemaError(source + ": header must start with ID<TAB>Tweet");
  std::vector<std::string> cols;
  for (std::size_t i = 2; i < header.size(); ++i) cols.push_back(trim(header[i]));
  const auto& names = space.names();
  std::vector<std::string> missing, extra;
  for (const auto& n : names)
    if (std::find(cols.begin(), cols.end(), n) == cols.end()) missing.push_back(n);
  for (const auto& c : cols)
    if (std::find(names.begin(), names.end(), c) == names.end()) extra.push_back(c);
  if (!missing.empty() || !extra.empty()) {
    throw SchemaError(fmt::format("{}: label columns do not match the label space (missing: [{}], extra: [{}])",
                                  source, fmt::join(missing, ", "), fmt::join(extra, ", ")));
  }
  if (cols != names) {
    throw SchemaError(fmt::format("{}: label columns out of order (expected {}, got {})", source,
                                  fmt::join(names, ","), fmt::join(cols, ",")));
  }
}

}  // namespace

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "valid" || text == "dev") return Split::valid;
  if (text == "test") return Split::test;
  throw UsageError("unknown split: " + text);
}

Split split_from_filename(const std::filesystem::path& path) {
  auto name = utf8_lower(path.filename().string());
  if (name.find("test") != std::string::npos) return Split::test;
  if (name.find("dev") != std::string::npos || name.find("valid") != std::string::npos)
    return Split::valid;
  return Split::train;
}

std::vector<LabelVector> Dataset::gold() const {
  std::vector<LabelVector> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.labels);
  return out;
}

Dataset read_ec_tsv(std::istream& in, const LabelSpace& space, Split split,
                    const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source_name + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // UTF-8 byte order mark
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  check_header(split_tabs(line), space, source_name);

  Dataset data;
  data.split = split;
  data.space = space;
  std::unordered_set<std::string> ids;
  const std::size_t expected_cols = 2 + space.size();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    const std::string row_id = cols.empty() ? "" : cols[0];
    if (cols.size() != expected_cols) {
      throw ParseError(fmt::format("{}:{}: row {} has {} columns, expected {}", source_name, line_no,
                                   row_id, cols.size(), expected_cols));
    }
    Example ex;
    ex.id = row_id;
    ex.raw_text = cols[1];
    std::vector<std::uint8_t> bits(space.size());
    for (std::size_t c = 0; c < space.size(); ++c) {
      const auto cell = trim(cols[2 + c]);
      if (cell == "0") {
        bits[c] = 0;
      } else if (cell == "1") {
        bits[c] = 1;
      } else {
        throw ParseError(fmt::format("{}:{}: row {} has non-0/1 value '{}' in column {}", source_name,
                                     line_no, row_id, cell, space.name(c)));
      }
    }
    ex.labels = LabelVector(std::move(bits));
    if (!ids.insert(ex.id).second)
      throw ParseError(fmt::format("{}:{}: duplicate id {}", source_name, line_no, ex.id));
    ex.tokens = normalize(ex.raw_text);
    data.examples.push_back(std::move(ex));
  }
  return data;
}

Dataset load_ec_tsv(const std::filesystem::path& path, const LabelSpace& space, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  return read_ec_tsv(in, space, split, path.string());
}

void write_ec_tsv(std::ostream& out, const Dataset& data, const std::vector<LabelVector>& labels) {
  if (labels.size() != data.size()) throw UsageError("label count does not match dataset size");
  out << "ID\tTweet";
  for (const auto& n : data.space.names()) out << '\t' << n;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << data.examples[i].id << '\t' << data.examples[i].raw_text;
    for (std::size_t c = 0; c < data.space.size(); ++c) out << '\t' << (labels[i].test(c) ? '1' : '0');
    out << '\n';
  }
}

void write_ec_tsv(std::ostream& out, const Dataset& data) { write_ec_tsv(out, data, data.gold()); }

void write_jsonl(std::ostream& out, const Dataset& data) {
  for (const auto& ex : data.examples) {
    nlohmann::ordered_json j;
    j["id"] = ex.id;
    j["tokens"] = ex.tokens;
    j["labels"] = ex.labels.bits();
    out << j.dump() << '\n';
  }
}

double DatasetStats::pct(std::size_t k) const {
  auto it = co_existing_pct.find(k);
  return it == co_existing_pct.end() ? 0.0 : it->second;
}

DatasetStats compute_stats(const std::vector<Dataset>& datasets) {
  DatasetStats stats;
  if (datasets.empty()) return stats;
  const auto& space = datasets.front().space;
  stats.class_count = space.size();
  for (const auto& d : datasets) {
    if (!(d.space == space)) throw UsageError("datasets use different label spaces");
    stats.counts.push_back({d.split, d.size()});
    stats.total += d.size();
    for (const auto& ex : d.examples) {
      auto k = ex.labels.count();
      if (k == 0)
        ++stats.neutral_count;
      else
        ++stats.co_existing_counts[k];
    }
  }
  const auto non_neutral = stats.total - stats.neutral_count;
  for (const auto& [k, n] : stats.co_existing_counts)
    stats.co_existing_pct[k] = non_neutral == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(non_neutral);
  return stats;
}

std::string format_stats(const DatasetStats& stats) {
  std::ostringstream os;
  for (const auto& c : stats.counts) os << fmt::format("{:<14}{:>8}\n", to_string(c.split) + " (#)", c.count);
  os << fmt::format("{:<14}{:>8}\n", "Total (#)", stats.total);
  os << fmt::format("{:<14}{:>8}\n", "Classes (#)", stats.class_count);
  os << fmt::format("{:<14}{:>8}\n", "Neutral (#)", stats.neutral_count);
  for (const auto& [k, p] : stats.co_existing_pct)
    os << fmt::format("{:<14}{:>8.2f}\n", fmt::format("{} co.emo (%)", k), p);
  return os.str();
}

}  // namespace spanemo
