#include "spanemo/wordpiece.hpp"

#include <fstream>

#include "spanemo/error.hpp"

namespace spanemo {
namespace {

bool is_ascii_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) || (c >= 123 && c <= 126);
}

// Byte length of the UTF-8 sequence starting with `lead`.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

}  // namespace

WordPieceVocab::WordPieceVocab(std::vector<std::string> pieces, bool split_punctuation)
    : pieces_(std::move(pieces)), split_punctuation_(split_punctuation) {
  for (std::size_t i = 0; i < pieces_.size(); ++i) index_.emplace(pieces_[i], static_cast<int>(i));
  pad_ = id(kPad);
  unk_ = id(kUnk);
  cls_ = id(kCls);
  sep_ = id(kSep);
  if (pad_ < 0 || unk_ < 0 || cls_ < 0 || sep_ < 0)
    throw UsageError("vocabulary lacks one of [PAD] [UNK] [CLS] [SEP]");
}

WordPieceVocab WordPieceVocab::load(const std::filesystem::path& path, bool split_punctuation) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open vocabulary " + path.string());
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pieces.push_back(line);
  }
  return WordPieceVocab(std::move(pieces), split_punctuation);
}

void WordPieceVocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write vocabulary " + path.string());
  for (const auto& p : pieces_) out << p << '\n';
}

WordPieceVocab WordPieceVocab::from_words(const std::vector<std::string>& words) {
  std::vector<std::string> pieces{kPad, kUnk, kCls, kSep};
  std::unordered_map<std::string, int> seen;
  for (const auto& p : pieces) seen.emplace(p, 0);
  for (const auto& w : words)
    if (!w.empty() && seen.emplace(w, 0).second) pieces.push_back(w);
  return WordPieceVocab(std::move(pieces), false);
}

int WordPieceVocab::id(const std::string& piece) const {
  auto it = index_.find(piece);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> WordPieceVocab::wordpiece(const std::string& word) const {
  if (int whole = id(word); whole >= 0) return {whole};
  std::vector<int> out;
  std::size_t start = 0;
  while (start < word.size()) {
    std::size_t end = word.size();
    int found = -1;
    while (end > start) {
      std::string sub = word.substr(start, end - start);
      if (start > 0) sub = "##" + sub;
      if (int i = id(sub); i >= 0) {
        found = i;
        break;
      }
      // step back one whole code point
      do {
        --end;
      } while (end > start && (static_cast<unsigned char>(word[end]) & 0xC0) == 0x80);
    }
    if (found < 0) return {unk_};
    out.push_back(found);
    start = end;
  }
  return out;
}

std::vector<int> WordPieceVocab::tokenize_word(const std::string& word) const {
  if (word.empty()) return {};
  if (!split_punctuation_ || id(word) >= 0) return wordpiece(word);
  std::vector<int> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      auto p = wordpiece(current);
      out.insert(out.end(), p.begin(), p.end());
      current.clear();
    }
  };
  for (std::size_t i = 0; i < word.size();) {
    auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = utf8_len(c);
    if (len == 1 && is_ascii_punct(c)) {
      flush();
      auto p = wordpiece(std::string(1, static_cast<char>(c)));
      out.insert(out.end(), p.begin(), p.end());
    } else {
      current.append(word, i, len);
    }
    i += len;
  }
  flush();
  return out;
}

}  // namespace spanemo
