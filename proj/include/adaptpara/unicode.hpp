#pragma once

#include <string>
#include <string_view>

// Minimal UTF-8 helpers. Offsets everywhere in the library count Unicode
// scalar values, so text is decoded once and sliced as UTF-32.
namespace adaptpara::unicode {

// Invalid sequences decode to U+FFFD, one replacement per offending byte.
std::u32string Decode(std::string_view utf8);
std::string Encode(std::u32string_view text);

bool IsSpace(char32_t c);
bool IsDigit(char32_t c);
bool IsLetter(char32_t c);
bool IsUpper(char32_t c);
char32_t ToLower(char32_t c);

std::string ToLower(std::string_view utf8);
std::size_t Length(std::string_view utf8);

}  // namespace adaptpara::unicode
