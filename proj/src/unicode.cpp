#include "spacecov/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "spacecov/error.hpp"

namespace spacecov::uni {

bool valid_utf8(std::string_view bytes, std::size_t* bad_offset) {
  const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
  int32_t i = 0;
  auto length = static_cast<int32_t>(bytes.size());
  while (i < length) {
    int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      if (bad_offset) *bad_offset = static_cast<std::size_t>(start);
      return false;
    }
  }
  return true;
}

namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec) || n == nullptr) fail("ICU: NFC normalizer unavailable");
  return *n;
}

}  // namespace

std::string nfc(const std::string& utf8) {
  UErrorCode ec = U_ZERO_ERROR;
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(utf8);
  icu::UnicodeString out = nfc_instance().normalize(s, ec);
  if (U_FAILURE(ec)) fail("ICU: NFC normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string casefold(const std::string& utf8) {
  icu::UnicodeString s = icu::UnicodeString::fromUTF8(utf8);
  s.foldCase(U_FOLD_CASE_DEFAULT);
  std::string result;
  s.toUTF8String(result);
  return result;
}

std::string collapse_whitespace(const std::string& utf8) {
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  auto length = static_cast<int32_t>(utf8.size());
  std::string out;
  out.reserve(utf8.size());
  bool pending_space = false;
  int32_t i = 0;
  while (i < length) {
    int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) fail("invalid UTF-8 at byte offset ", start);
    if (u_isUWhiteSpace(c)) {
      if (!out.empty()) pending_space = true;  // drop leading whitespace
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(utf8, static_cast<std::size_t>(start),
               static_cast<std::size_t>(i - start));
  }
  return out;  // trailing whitespace left in pending_space is dropped
}

}  // namespace spacecov::uni
