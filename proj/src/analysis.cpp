#include "spanemo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include "json.hpp"

#include "spanemo/checkpoint.hpp"
#include "spanemo/error.hpp"
#include "spanemo/figures.hpp"
#include "spanemo/tweet_normalizer.hpp"

namespace spanemo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_label_segment(const SpanModel& model) {
  if (model.head_kind() != HeadKind::span)
    throw UsageError("label/word similarities need a model trained with the label segment");
}

RowVector word_vector(const Matrix& hidden, const WordSpan& span) {
  const auto n = static_cast<Eigen::Index>(span.end - span.begin);
  return hidden.middleRows(static_cast<Eigen::Index>(span.begin), n).colwise().mean();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

std::string alpha_tag(double alpha) { return fmt::format("{:g}", alpha); }

}  // namespace

double cosine_similarity(const RowVector& a, const RowVector& b) {
  if (a.size() != b.size()) throw DimensionError("cosine of vectors with different widths");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

AssociationTable word_associations(const SpanModel& model, const Dataset& data, std::size_t k) {
  require_label_segment(model);
  if (data.empty()) throw UsageError("word associations need a non-empty dataset");
  const auto& space = model.space();
  struct Acc {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::vector<std::map<std::string, Acc>> acc(space.size());

  for (const auto& ex : data.examples) {
    const auto input = model.assemble(ex.tokens);
    const Matrix hidden = model.hidden_states(input);
    for (const auto& span : input.word_spans) {
      if (span.word == kUserToken || span.word == kUrlToken) continue;
      const RowVector w = word_vector(hidden, span);
      for (std::size_t c = 0; c < space.size(); ++c) {
        const RowVector l = hidden.row(static_cast<Eigen::Index>(input.label_positions[c]));
        auto& a = acc[c][span.word];
        a.sum += cosine_similarity(l, w);
        ++a.count;
      }
    }
  }

  AssociationTable table;
  table.labels = space.names();
  for (std::size_t c = 0; c < space.size(); ++c) {
    std::vector<WordScore> row;
    row.reserve(acc[c].size());
    for (const auto& [word, a] : acc[c]) row.push_back({word, a.sum / static_cast<double>(a.count)});
    std::stable_sort(row.begin(), row.end(), [](const WordScore& x, const WordScore& y) {
      if (x.similarity != y.similarity) return x.similarity > y.similarity;
      return x.word < y.word;
    });
    if (row.size() > k) row.resize(k);
    table.rows.push_back(std::move(row));
  }
  return table;
}

SimilarityMatrix sentence_heatmap(const SpanModel& model, const Example& example) {
  require_label_segment(model);
  const auto input = model.assemble(example.tokens);
  if (input.word_spans.empty()) throw UsageError("example " + example.id + " has an empty sentence");
  const Matrix hidden = model.hidden_states(input);

  const auto c = static_cast<Eigen::Index>(input.label_positions.size());
  const auto t = static_cast<Eigen::Index>(input.word_spans.size());
  Matrix labels(c, hidden.cols()), words(t, hidden.cols());
  for (Eigen::Index i = 0; i < c; ++i) labels.row(i) = hidden.row(static_cast<Eigen::Index>(input.label_positions[static_cast<std::size_t>(i)]));
  for (Eigen::Index j = 0; j < t; ++j) words.row(j) = word_vector(hidden, input.word_spans[static_cast<std::size_t>(j)]);

  auto normalize_rows = [](Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double n = m.row(r).norm();
      if (n > 0.0) m.row(r) /= n;
    }
  };
  normalize_rows(labels);
  normalize_rows(words);

  SimilarityMatrix out;
  out.labels = model.space().names();
  for (const auto& span : input.word_spans) out.words.push_back(span.word);
  out.values = (labels * words.transpose()).cwiseMax(-1.0).cwiseMin(1.0);
  return out;
}

std::string to_string(CorrelationSource source) {
  return source == CorrelationSource::gold ? "gold" : "predicted";
}

bool CorrelationMatrix::defined(std::size_t i, std::size_t j) const {
  return !std::isnan(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
}

CorrelationMatrix label_correlations(const std::vector<LabelVector>& labels, const LabelSpace& space,
                                     CorrelationSource source) {
  if (labels.size() < 2) throw UsageError("label correlations need at least two examples");
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto c = static_cast<Eigen::Index>(space.size());
  Matrix x(n, c);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& y = labels[static_cast<std::size_t>(r)];
    if (y.size() != space.size()) throw DimensionError("label vector length does not match the label space");
    for (Eigen::Index j = 0; j < c; ++j) x(r, j) = y.test(static_cast<std::size_t>(j)) ? 1.0 : 0.0;
  }
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered;

  CorrelationMatrix out;
  out.labels = space.names();
  out.source = source;
  out.values = Matrix::Constant(c, c, kNaN);
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      if (cov(i, i) == 0.0 || cov(j, j) == 0.0) continue;
      out.values(i, j) = i == j ? 1.0 : std::clamp(cov(i, j) / std::sqrt(cov(i, i) * cov(j, j)), -1.0, 1.0);
    }
  }
  return out;
}

std::vector<SweepRow> alpha_sweep(const TrainConfig& cfg, const std::vector<double>& grid, const Dataset& train,
                                  const Dataset& valid, const std::filesystem::path& out_dir) {
  for (double a : grid)
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError(fmt::format("alpha grid value {} is outside [0, 1]", a));
  std::vector<SweepRow> rows;
  for (double a : grid) {
    SweepRow row;
    row.alpha = a;
    try {
      TrainConfig run = cfg;
      run.alpha = a;
      const auto result = spanemo::train(run, train, valid, out_dir / ("alpha_" + alpha_tag(a)));
      row.valid = result.best_valid;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::string similarity_csv(const SimilarityMatrix& matrix) {
  std::ostringstream os;
  os << "label";
  for (const auto& w : matrix.words) os << ',' << csv_field(w);
  os << '\n';
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    os << csv_field(matrix.labels[i]);
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j)
      os << ',' << fmt::format("{:.6f}", matrix.values(static_cast<Eigen::Index>(i), j));
    os << '\n';
  }
  return os.str();
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
  std::ostringstream os;
  os << "label";
  for (const auto& l : matrix.labels) os << ',' << csv_field(l);
  os << '\n';
  for (std::size_t i = 0; i < matrix.labels.size(); ++i) {
    os << csv_field(matrix.labels[i]);
    for (std::size_t j = 0; j < matrix.labels.size(); ++j) {
      if (matrix.defined(i, j))
        os << ',' << fmt::format("{:.6f}", matrix.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      else
        os << ",undefined";
    }
    os << '\n';
  }
  return os.str();
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "alpha,ok,miF1,maF1,jacS,error\n";
  for (const auto& r : rows) {
    if (r.ok)
      os << fmt::format("{:.2f},1,{:.6f},{:.6f},{:.6f},\n", r.alpha, r.valid.micro_f1, r.valid.macro_f1,
                        r.valid.jaccard);
    else
      os << fmt::format("{:.2f},0,,,,{}\n", r.alpha, csv_field(r.error));
  }
  return os.str();
}

void write_associations(const std::filesystem::path& dir, const AssociationTable& table) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  csv << "label,rank,word,similarity\n";
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < table.labels.size(); ++c) {
    auto& list = j[table.labels[c]] = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < table.rows[c].size(); ++r) {
      const auto& s = table.rows[c][r];
      csv << fmt::format("{},{},{},{:.6f}\n", csv_field(table.labels[c]), r + 1, csv_field(s.word), s.similarity);
      list.push_back({{"word", s.word}, {"similarity", s.similarity}});
    }
  }
  write_text(dir / "associations.csv", csv.str());
  write_text(dir / "associations.json", j.dump(2) + "\n");
}

void write_similarity(const std::filesystem::path& dir, const std::string& stem, const SimilarityMatrix& matrix) {
  std::filesystem::create_directories(dir);
  write_text(dir / (stem + ".csv"), similarity_csv(matrix));
  figures::Heatmap map{"label/word cosine similarity", matrix.labels, matrix.words, matrix.values, -1.0, 1.0};
  write_text(dir / (stem + ".svg"), figures::heatmap_svg(map));
  figures::write_heatmap_png(dir / (stem + ".png"), map);
}

void write_correlations(const std::filesystem::path& dir, const std::string& stem, const CorrelationMatrix& matrix) {
  std::filesystem::create_directories(dir);
  write_text(dir / (stem + ".csv"), correlation_csv(matrix));
  figures::Heatmap map{"label correlations (" + to_string(matrix.source) + ")", matrix.labels, matrix.labels,
                       matrix.values, -1.0, 1.0};
  write_text(dir / (stem + ".svg"), figures::heatmap_svg(map));
  figures::write_heatmap_png(dir / (stem + ".png"), map);
}

void write_sweep(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
  std::filesystem::create_directories(dir);
  write_text(dir / "sweep.csv", sweep_csv(rows));
  figures::LineChart chart{"validation scores by alpha", "alpha", "score", {}};
  figures::Series mi{"miF1", {}, {}}, ma{"maF1", {}, {}}, jac{"jacS", {}, {}};
  for (const auto& r : rows) {
    if (!r.ok) continue;
    for (auto* s : {&mi, &ma, &jac}) s->x.push_back(r.alpha);
    mi.y.push_back(r.valid.micro_f1);
    ma.y.push_back(r.valid.macro_f1);
    jac.y.push_back(r.valid.jaccard);
  }
  chart.series = {mi, ma, jac};
  write_text(dir / "sweep.svg", figures::line_chart_svg(chart));
  figures::write_line_chart_png(dir / "sweep.png", chart);
}

}  // namespace spanemo
