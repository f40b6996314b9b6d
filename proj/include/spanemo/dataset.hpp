#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spanemo/label_space.hpp"

namespace spanemo {

enum class Split { train, valid, test };

std::string to_string(Split split);
/// Accepts "train", "valid"/"dev", "test"; throws UsageError otherwise.
Split parse_split(const std::string& text);
/// Guesses the split from an E-c file name ("...-train.txt", "...-dev.txt",
/// "...-test-gold.txt"); defaults to train.
Split split_from_filename(const std::filesystem::path& path);

struct Example {
  std::string id;
  std::string raw_text;
  std::vector<std::string> tokens;
  LabelVector labels;
};

struct Dataset {
  Split split = Split::train;
  std::vector<Example> examples;
  LabelSpace space = default_semeval_space();

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  std::vector<LabelVector> gold() const;
};

/// Reads an E-c TSV: header `ID<TAB>Tweet<TAB><label>...`, one 0/1 column per
/// label in LabelSpace order. Tokens are filled by normalize().
/// Throws SchemaError on header mismatch, ParseError on bad rows/cells,
/// UsageError on duplicate ids or an unreadable file.
Dataset load_ec_tsv(const std::filesystem::path& path, const LabelSpace& space,
                    Split split = Split::train);
Dataset read_ec_tsv(std::istream& in, const LabelSpace& space, Split split,
                    const std::string& source_name = "<stream>");

/// Writes the E-c layout back (raw text verbatim).
void write_ec_tsv(std::ostream& out, const Dataset& data);
/// Same layout with labels taken from `labels` instead of the gold vectors.
void write_ec_tsv(std::ostream& out, const Dataset& data, const std::vector<LabelVector>& labels);

/// One `{"id","tokens","labels"}` object per line.
void write_jsonl(std::ostream& out, const Dataset& data);

struct SplitCount {
  Split split;
  std::size_t count;
};

struct DatasetStats {
  std::vector<SplitCount> counts;
  std::size_t total = 0;
  std::size_t class_count = 0;
  std::size_t neutral_count = 0;
  /// k -> number of instances with exactly k gold labels (k >= 1).
  std::map<std::size_t, std::size_t> co_existing_counts;
  /// k -> percentage among non-neutral instances.
  std::map<std::size_t, double> co_existing_pct;

  double pct(std::size_t k) const;
};

/// Statistics over all splits combined; percentages exclude neutral rows.
/// Throws UsageError if the datasets use different label spaces.
DatasetStats compute_stats(const std::vector<Dataset>& datasets);

/// Table-style text rendering of the statistics.
std::string format_stats(const DatasetStats& stats);

}  // namespace spanemo
