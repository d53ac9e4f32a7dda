#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spacecov/unicode.hpp"

using namespace spacecov;

// Expected byte sequences were produced independently with Python's
// unicodedata module and frozen here.

TEST_CASE("valid_utf8 accepts multi-byte text and rejects malformed bytes") {
  CHECK(uni::valid_utf8("plain ascii"));
  CHECK(uni::valid_utf8("près de 안에 上面"));
  CHECK(uni::valid_utf8(""));

  std::size_t offset = 0;
  CHECK_FALSE(uni::valid_utf8(std::string_view("ab\xC0\x80", 4), &offset));
  CHECK(offset == 2);
  CHECK_FALSE(uni::valid_utf8(std::string_view("\x80", 1)));       // lone continuation
  CHECK_FALSE(uni::valid_utf8(std::string_view("a\xE1\x84", 3)));  // truncated
  CHECK_FALSE(uni::valid_utf8(std::string_view("\xED\xA0\x80", 3)));  // surrogate
}

TEST_CASE("nfc composes decomposed Hangul jamo") {
  // U+1112 U+1161 U+11AB U+1100 U+116E U+11A8 U+110B U+1165
  const std::string jamo =
      "\xe1\x84\x92\xe1\x85\xa1\xe1\x86\xab\xe1\x84\x80\xe1\x85\xae"
      "\xe1\x86\xa8\xe1\x84\x8b\xe1\x85\xa5";
  const std::string composed = "\xed\x95\x9c\xea\xb5\xad\xec\x96\xb4";
  CHECK(uni::nfc(jamo) == composed);
  CHECK(uni::nfc(composed) == composed);
}

TEST_CASE("nfc composes combining accents") {
  // e + U+0301, e + U+0300
  const std::string decomposed = "e\xcc\x81tage\xcc\x80";
  CHECK(uni::nfc(decomposed) == "\xc3\xa9tag\xc3\xa8");  // étagè
}

TEST_CASE("casefold applies full default folding") {
  CHECK(uni::casefold("Stra\xc3\x9f""e") == "strasse");
  CHECK(uni::casefold("\xce\xa3\xce\x9f\xce\xa6\xce\x9f\xce\xa3") ==
        "\xcf\x83\xce\xbf\xcf\x86\xce\xbf\xcf\x83");  // ΣΟΦΟΣ -> σοφοσ
  // Dotted capital I folds to i + combining dot above (default, not Turkic)
  CHECK(uni::casefold("\xc4\xb0stanbul") == "i\xcc\x87stanbul");
  CHECK(uni::casefold("\xc3\x9c" "BER") == "\xc3\xbc" "ber");  // ÜBER -> über
  CHECK(uni::casefold("안에") == "안에");  // uncased script
}

TEST_CASE("collapse_whitespace handles Unicode space classes") {
  CHECK(uni::collapse_whitespace("  on  top  ") == "on top");
  CHECK(uni::collapse_whitespace("\t on\t\ttop \t") == "on top");
  // U+3000 ideographic space counts as White_Space
  CHECK(uni::collapse_whitespace("\xe3\x80\x80 on \t top\xe3\x80\x80of \xe3\x80\x80") ==
        "on top of");
  CHECK(uni::collapse_whitespace("") == "");
  CHECK(uni::collapse_whitespace(" \t ") == "");
  CHECK(uni::collapse_whitespace("single") == "single");
}
