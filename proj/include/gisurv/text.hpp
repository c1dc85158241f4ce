#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace gisurv::text {

/// A token of a UTF-8 string with its byte span in the source.
struct Token {
    std::string norm;  // ASCII-lowercased token text
    std::size_t begin;
    std::size_t end;
};

enum class Apostrophes {
    join,   // "he's" is one token
    split,  // "he's" is "he" + "s"
};

/// Splits text into word tokens.
///
/// A word token is a maximal run of alphanumeric code points (ASCII letters
/// and digits, plus any non-ASCII code point outside the Unicode punctuation
/// and space blocks). With Apostrophes::join, an apostrophe (' or U+2019)
/// between two word characters stays inside the token. The ampersand is
/// emitted as a token of its own so that terms such as "a&e" can be matched.
/// Everything else is a separator.
std::vector<Token> tokenize(std::string_view text, Apostrophes mode = Apostrophes::join);

std::string to_lower(std::string_view s);

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

/// Collapses runs of ASCII whitespace to a single space and trims.
std::string collapse_whitespace(std::string_view s);

/// Splits on runs of ASCII whitespace.
std::vector<std::string_view> split_whitespace(std::string_view s);

bool is_space(char c) noexcept;

/// True if the byte range [begin, end) of text contains only ASCII whitespace.
bool only_whitespace(std::string_view text, std::size_t begin, std::size_t end);

}  // namespace gisurv::text
