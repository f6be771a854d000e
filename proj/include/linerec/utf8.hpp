#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace linerec {

// Decode UTF-8 into Unicode scalar values. Malformed bytes throw FormatError.
std::u32string utf8_decode(const std::string& s);

// Encode Unicode scalar values back to UTF-8.
std::string utf8_encode(const std::u32string& s);
std::string utf8_encode(char32_t c);

// Simple case folding for Latin text: ASCII A-Z and the Latin-1 uppercase
// range map to lowercase. Sufficient for the supported symbol set.
std::u32string fold_case(const std::u32string& s);

// Whitespace-separated tokens (space, tab; consecutive separators collapse).
std::vector<std::u32string> split_words(const std::u32string& s);

}  // namespace linerec
