#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace spanemo {

inline constexpr std::string_view kUserToken = "<user>";
inline constexpr std::string_view kUrlToken = "<url>";

/// Maximum run length kept for a repeated character ("soooo" -> "sooo").
inline constexpr int kMaxRepeat = 3;

/// Deterministic tweet normalizer.
///
/// Rules, applied in one left-to-right scan over UTF-8 code points:
///  - whitespace separates chunks;
///  - a chunk starting with http://, https:// or www. becomes "<url>";
///  - '@' followed by [A-Za-z0-9_]+ becomes "<user>";
///  - word runs (letters, digits, '_', non-ASCII non-emoji code points, and
///    apostrophes between word characters) form one token; a leading '#'
///    stays attached to the word;
///  - a run of one repeated punctuation character is one token, different
///    punctuation characters are separate tokens;
///  - each emoji (with trailing modifiers, variation selectors and ZWJ
///    continuations) is a single token;
///  - tokens are lower-cased, then any run of one code point longer than
///    kMaxRepeat is collapsed to kMaxRepeat.
///
/// The literal placeholders "<user>" and "<url>" are recognized on input, so
/// normalizing the space-joined output is a fixed point.
std::vector<std::string> normalize(std::string_view raw_text);

/// Lower-cases ASCII, Latin-1 Supplement and Latin Extended-A letters.
std::string utf8_lower(std::string_view text);

/// Collapses runs of one code point longer than `max_run`.
std::string collapse_repeats(std::string_view text, int max_run = kMaxRepeat);

}  // namespace spanemo
