#include "gisurv/text.hpp"

#include <cstdint>

namespace gisurv::text {

namespace {

enum class CharClass { word, apostrophe, ampersand, separator };

struct Decoded {
    char32_t cp;
    std::size_t len;
};

// Invalid sequences decode as a single byte so tokenization never stalls.
Decoded decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, 1};
    }
    if (i + len > s.size()) return {b0, 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {b0, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

CharClass classify(char32_t cp) {
    if (cp < 0x80) {
        const auto c = static_cast<char>(cp);
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) return CharClass::word;
        if (c == '\'') return CharClass::apostrophe;
        if (c == '&') return CharClass::ampersand;
        return CharClass::separator;
    }
    if (cp == 0x2019) return CharClass::apostrophe;
    if (cp >= 0x80 && cp <= 0xBF) return CharClass::separator;  // C1 controls, nbsp, Latin-1 punctuation
    if (cp == 0xD7 || cp == 0xF7) return CharClass::separator;
    if (cp >= 0x2000 && cp <= 0x206F) return CharClass::separator;  // general punctuation
    if (cp >= 0x2190 && cp <= 0x2BFF) return CharClass::separator;  // arrows, math operators, symbols
    if (cp >= 0x2E00 && cp <= 0x2E7F) return CharClass::separator;
    if (cp >= 0x3000 && cp <= 0x303F) return CharClass::separator;
    if (cp >= 0xFE30 && cp <= 0xFE6F) return CharClass::separator;
    if (cp >= 0xFF01 && cp <= 0xFF0F) return CharClass::separator;
    if (cp == 0xFEFF) return CharClass::separator;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return CharClass::separator;  // emoji
    return CharClass::word;
}

char lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

}  // namespace

std::vector<Token> tokenize(std::string_view text, Apostrophes mode) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = text.size();

    std::size_t start = 0;
    bool in_word = false;
    // Byte position just after the last word character of the current token.
    std::size_t word_end = 0;

    auto close = [&]() {
        if (in_word) {
            out.push_back({to_lower(text.substr(start, word_end - start)), start, word_end});
            in_word = false;
        }
    };

    while (i < n) {
        const auto [cp, len] = decode(text, i);
        const CharClass cls = classify(cp);
        switch (cls) {
        case CharClass::word:
            if (!in_word) {
                in_word = true;
                start = i;
            } else if (word_end != i) {
                // an apostrophe sat between word_end and i
                if (mode == Apostrophes::split) {
                    out.push_back({to_lower(text.substr(start, word_end - start)), start, word_end});
                    start = i;
                }
            }
            word_end = i + len;
            break;
        case CharClass::apostrophe:
            if (in_word && word_end == i) {
                // Possibly internal; decided when the next character arrives.
                const std::size_t next = i + len;
                const bool followed = next < n && classify(decode(text, next).cp) == CharClass::word;
                if (!followed) close();
            } else {
                close();
            }
            break;
        case CharClass::ampersand:
            close();
            out.push_back({"&", i, i + len});
            break;
        case CharClass::separator:
            close();
            break;
        }
        i += len;
    }
    close();
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = lower_ascii(c);
    return out;
}

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        const std::size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) out.push_back(s.substr(b, i - b));
    }
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    for (auto w : split_whitespace(s)) {
        if (!out.empty()) out.push_back(' ');
        out.append(w);
    }
    return out;
}

bool only_whitespace(std::string_view text, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
        if (!is_space(text[i])) return false;
    return true;
}

}  // namespace gisurv::text
