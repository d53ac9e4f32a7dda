#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace spacecov::uni {

bool valid_utf8(std::string_view bytes, std::size_t* bad_offset = nullptr);

// Canonical composition (NFC).
std::string nfc(const std::string& utf8);

// Unicode default (full) case folding; a no-op for uncased scripts.
std::string casefold(const std::string& utf8);

// Strips leading/trailing White_Space codepoints and collapses internal
// runs of them to a single ASCII space.
std::string collapse_whitespace(const std::string& utf8);

}  // namespace spacecov::uni
