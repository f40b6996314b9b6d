#include "doctest.h"

#include <random>

#include "spanemo/tweet_normalizer.hpp"

using namespace spanemo;
using Tokens = std::vector<std::string>;

namespace {

std::string join(const Tokens& t) {
  std::string out;
  for (const auto& s : t) out += (out.empty() ? "" : " ") + s;
  return out;
}

}  // namespace

TEST_CASE("mentions, urls, elongation and punctuation runs") {
  CHECK(normalize("@JohnDoe LOVED it!!!! http://x.co") == Tokens{"<user>", "loved", "it", "!!!", "<url>"});
  CHECK(normalize("www.example.com/path?q=1 and https://t.co/x") == Tokens{"<url>", "and", "<url>"});
  CHECK(normalize("soooooo goooood") == Tokens{"sooo", "goood"});
  CHECK(normalize("what?! ...") == Tokens{"what", "?", "!", "..."});
}

TEST_CASE("apostrophes, hashtags and case") {
  CHECK(normalize("Don't #Blessed") == Tokens{"don't", "#blessed"});
  CHECK(normalize("'quoted'") == Tokens{"'", "quoted", "'"});
  CHECK(normalize("ÉCOLE Ñandú") == Tokens{"école", "ñandú"});
}

TEST_CASE("emoji are single tokens") {
  CHECK(normalize("love it😍😍") == Tokens{"love", "it", "😍", "😍"});
  CHECK(normalize("👍🏽ok") == Tokens{"👍🏽", "ok"});
  CHECK(normalize("👨‍👩‍👧 fam") == Tokens{"👨‍👩‍👧", "fam"});
}

TEST_CASE("empty and whitespace-only input") {
  CHECK(normalize("").empty());
  CHECK(normalize(" \t\n ").empty());
}

TEST_CASE("collapse_repeats and utf8_lower") {
  CHECK(collapse_repeats("aaaaab", 3) == "aaab");
  CHECK(collapse_repeats("ééééé", 2) == "éé");
  CHECK(utf8_lower("ABC Ąę") == "abc ąę");
}

TEST_CASE("normalization is idempotent on generated tweets") {
  const std::vector<std::string> atoms{"@user_1", "http://t.co/q", "Hello", "WORLD", "!!!!!", "?", "#Tag",
                                       "can't", "😂", "👍🏽", "sooooo", "día", "...", ",", "x2", "'"};
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const int n = std::uniform_int_distribution<int>(0, 8)(rng);
    for (int k = 0; k < n; ++k) {
      text += atoms[std::uniform_int_distribution<std::size_t>(0, atoms.size() - 1)(rng)];
      if (std::bernoulli_distribution(0.7)(rng)) text += ' ';
    }
    const auto once = normalize(text);
    CHECK_MESSAGE(normalize(join(once)) == once, text);
    for (const auto& tok : once) CHECK(!tok.empty());
  }
}
