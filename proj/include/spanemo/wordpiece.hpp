#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

namespace spanemo {

/// Vocabulary with greedy longest-match-first subword splitting. Continuation
/// pieces carry a "##" prefix, as in BERT vocab.txt files.
class WordPieceVocab {
 public:
  static constexpr const char* kPad = "[PAD]";
  static constexpr const char* kUnk = "[UNK]";
  static constexpr const char* kCls = "[CLS]";
  static constexpr const char* kSep = "[SEP]";

  WordPieceVocab() = default;
  /// Pieces in id order. The four special tokens must be present.
  explicit WordPieceVocab(std::vector<std::string> pieces, bool split_punctuation = false);

  /// One piece per line; line number is the id.
  static WordPieceVocab load(const std::filesystem::path& path, bool split_punctuation = true);
  void save(const std::filesystem::path& path) const;

  /// Specials first, then every distinct word in first-seen order.
  static WordPieceVocab from_words(const std::vector<std::string>& words);

  std::size_t size() const { return pieces_.size(); }
  int id(const std::string& piece) const;  // -1 if absent
  bool contains(const std::string& piece) const { return id(piece) >= 0; }
  const std::string& piece(int id) const { return pieces_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& pieces() const { return pieces_; }

  int pad_id() const { return pad_; }
  int unk_id() const { return unk_; }
  int cls_id() const { return cls_; }
  int sep_id() const { return sep_; }
  bool split_punctuation() const { return split_punctuation_; }

  /// Pieces of one pre-tokenized word. Never empty for a non-empty word:
  /// unsplittable words map to [UNK]. With split_punctuation, ASCII
  /// punctuation is split off first (BERT basic tokenizer behavior).
  std::vector<int> tokenize_word(const std::string& word) const;

 private:
  std::vector<int> wordpiece(const std::string& word) const;

  std::vector<std::string> pieces_;
  std::unordered_map<std::string, int> index_;
  bool split_punctuation_ = false;
  int pad_ = -1, unk_ = -1, cls_ = -1, sep_ = -1;
};

}  // namespace spanemo
