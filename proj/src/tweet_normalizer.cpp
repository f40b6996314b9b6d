#include "spanemo/tweet_normalizer.hpp"

#include <cstdint>

namespace spanemo {
namespace {

struct CodePoint {
  char32_t value;
  std::size_t begin;
  std::size_t length;
};

// Invalid bytes decode as U+FFFD, one byte at a time.
std::vector<CodePoint> decode(std::string_view s) {
  std::vector<CodePoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    char32_t cp = 0xFFFD;
    if (len == 0 || i + len > s.size()) {
      len = 1;
    } else {
      cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
      bool ok = true;
      for (std::size_t k = 1; k < len; ++k) {
        auto cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0) != 0x80) {
          ok = false;
          break;
        }
        cp = (cp << 6) | (cc & 0x3F);
      }
      if (!ok) {
        cp = 0xFFFD;
        len = 1;
      }
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

char32_t lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    // Latin Extended-A pairs upper/lower on even/odd code points, except the
    // 0x139..0x148 and 0x179..0x17E ranges which are shifted by one.
    bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    if (odd_upper ? (cp % 2 == 1) : (cp % 2 == 0)) return cp + 1;
  }
  return cp;
}

bool is_space(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' ||
         cp == 0xA0 || cp == 0x2028 || cp == 0x2029 || cp == 0x3000 ||
         (cp >= 0x2000 && cp <= 0x200A);
}

bool is_emoji(char32_t cp) {
  return (cp >= 0x1F000 && cp <= 0x1FAFF) || (cp >= 0x2600 && cp <= 0x27BF) ||
         (cp >= 0x2300 && cp <= 0x23FF) || (cp >= 0x2B00 && cp <= 0x2BFF) || cp == 0x3030 ||
         cp == 0x303D || cp == 0x3297 || cp == 0x3299 || cp == 0x00A9 || cp == 0x00AE ||
         cp == 0x203C || cp == 0x2049 || cp == 0x2122 || cp == 0x2139;
}

// Code points that attach to the preceding emoji.
bool is_emoji_modifier(char32_t cp) {
  return cp == 0xFE0F || cp == 0xFE0E || cp == 0x20E3 || (cp >= 0x1F3FB && cp <= 0x1F3FF) ||
         (cp >= 0xE0020 && cp <= 0xE007F);
}

constexpr char32_t kZwj = 0x200D;

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60 && cp != '_') || (cp >= 0x7B && cp <= 0x7E);
  }
  return (cp >= 0xA1 && cp <= 0xBF && cp != 0xAA && cp != 0xB5 && cp != 0xBA) || cp == 0xD7 ||
         cp == 0xF7 || (cp >= 0x2010 && cp <= 0x2027) || (cp >= 0x2030 && cp <= 0x205E) ||
         (cp >= 0x3001 && cp <= 0x3003) || cp == 0x060C || cp == 0x061B || cp == 0x061F ||
         cp == 0x066A || cp == 0x066B || cp == 0x066C || cp == 0x06D4 || cp == 0xFFFD;
}

bool is_word(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z') || cp == '_';
  return !is_space(cp) && !is_emoji(cp) && !is_emoji_modifier(cp) && !is_punct(cp) &&
         cp != kZwj && !(cp >= 0x200B && cp <= 0x200F);
}

bool is_handle_char(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z') || cp == '_';
}

bool starts_with_ci(const std::vector<CodePoint>& cps, std::size_t at, std::string_view prefix) {
  if (at + prefix.size() > cps.size()) return false;
  for (std::size_t k = 0; k < prefix.size(); ++k)
    if (lower(cps[at + k].value) != static_cast<char32_t>(prefix[k])) return false;
  return true;
}

std::string slice(std::string_view text, const std::vector<CodePoint>& cps, std::size_t a, std::size_t b) {
  if (a >= b) return {};
  return std::string(text.substr(cps[a].begin, cps[b - 1].begin + cps[b - 1].length - cps[a].begin));
}

}  // namespace

std::string utf8_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const auto& cp : decode(text)) {
    if (cp.value == 0xFFFD)
      out.append(text.substr(cp.begin, cp.length));
    else
      encode(lower(cp.value), out);
  }
  return out;
}

std::string collapse_repeats(std::string_view text, int max_run) {
  std::string out;
  out.reserve(text.size());
  auto cps = decode(text);
  int run = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    run = (i > 0 && cps[i].value == cps[i - 1].value) ? run + 1 : 1;
    if (run <= max_run) out.append(text.substr(cps[i].begin, cps[i].length));
  }
  return out;
}

std::vector<std::string> normalize(std::string_view raw_text) {
  const auto cps = decode(raw_text);
  const std::size_t n = cps.size();
  std::vector<std::string> raw_tokens;

  std::size_t i = 0;
  while (i < n) {
    if (is_space(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t chunk_end = i;
    while (chunk_end < n && !is_space(cps[chunk_end].value)) ++chunk_end;

    // Placeholders, URLs and mentions are recognized at token starts.
    if (starts_with_ci(cps, i, "http://") || starts_with_ci(cps, i, "https://") ||
        starts_with_ci(cps, i, "www.")) {
      raw_tokens.emplace_back(kUrlToken);
      i = chunk_end;
      continue;
    }
    if (starts_with_ci(cps, i, kUserToken)) {
      raw_tokens.emplace_back(kUserToken);
      i += kUserToken.size();
      continue;
    }
    if (starts_with_ci(cps, i, kUrlToken)) {
      raw_tokens.emplace_back(kUrlToken);
      i += kUrlToken.size();
      continue;
    }
    const char32_t c = cps[i].value;
    if (c == '@' && i + 1 < chunk_end && is_handle_char(cps[i + 1].value)) {
      std::size_t j = i + 1;
      while (j < chunk_end && is_handle_char(cps[j].value)) ++j;
      raw_tokens.emplace_back(kUserToken);
      i = j;
      continue;
    }
    if (is_word(c) || (c == '#' && i + 1 < chunk_end && is_word(cps[i + 1].value))) {
      std::size_t j = i + 1;
      while (j < chunk_end) {
        if (is_word(cps[j].value)) {
          ++j;
        } else if ((cps[j].value == '\'' || cps[j].value == 0x2019) && j + 1 < chunk_end &&
                   is_word(cps[j + 1].value)) {
          j += 2;
        } else {
          break;
        }
      }
      raw_tokens.push_back(slice(raw_text, cps, i, j));
      i = j;
      continue;
    }
    if (is_emoji(c) || is_emoji_modifier(c)) {
      std::size_t j = i + 1;
      while (j < chunk_end) {
        if (is_emoji_modifier(cps[j].value)) {
          ++j;
        } else if (cps[j].value == kZwj && j + 1 < chunk_end && is_emoji(cps[j + 1].value)) {
          j += 2;
        } else {
          break;
        }
      }
      raw_tokens.push_back(slice(raw_text, cps, i, j));
      i = j;
      continue;
    }
    if (c == kZwj || (c >= 0x200B && c <= 0x200F)) {  // stray format characters
      ++i;
      continue;
    }
    // Punctuation: a run of the same character.
    std::size_t j = i + 1;
    while (j < chunk_end && cps[j].value == c) ++j;
    raw_tokens.push_back(slice(raw_text, cps, i, j));
    i = j;
  }

  std::vector<std::string> tokens;
  tokens.reserve(raw_tokens.size());
  for (const auto& t : raw_tokens) tokens.push_back(collapse_repeats(utf8_lower(t)));
  return tokens;
}

}  // namespace spanemo
