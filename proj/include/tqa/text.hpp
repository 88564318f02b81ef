#pragma once
// UTF-8 handling and key normalization shared by every module.
//
// All offsets exposed by the library are in Unicode scalar values, not
// bytes. Composition covers the Latin precomposed range; that is enough
// for the corpora this library ingests (English Wikipedia text with
// occasional European names).

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tqa {

class Utf8Error : public std::runtime_error {
public:
    explicit Utf8Error(std::size_t byte_offset)
        : std::runtime_error("invalid UTF-8 sequence at byte " + std::to_string(byte_offset)),
          byte_offset(byte_offset) {}
    std::size_t byte_offset;
};

// Decodes UTF-8 to code points. Throws Utf8Error on malformed input
// (overlong forms, surrogates, truncated sequences).
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0;
        std::size_t len = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xE0) == 0xC0) {
            cp = b0 & 0x1F;
            len = 2;
        } else if ((b0 & 0xF0) == 0xE0) {
            cp = b0 & 0x0F;
            len = 3;
        } else if ((b0 & 0xF8) == 0xF0) {
            cp = b0 & 0x07;
            len = 4;
        } else {
            throw Utf8Error(i);
        }
        if (i + len > s.size()) throw Utf8Error(i);
        for (std::size_t k = 1; k < len; ++k) {
            unsigned char b = static_cast<unsigned char>(s[i + k]);
            if ((b & 0xC0) != 0x80) throw Utf8Error(i);
            cp = (cp << 6) | (b & 0x3F);
        }
        // overlong / out of range / surrogates
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            throw Utf8Error(i);
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) utf8_append(out, cp);
    return out;
}

// Length in Unicode scalar values; validates the input as a side effect.
inline std::size_t utf8_length(std::string_view s) { return utf8_decode(s).size(); }

inline bool is_space_cp(char32_t c) {
    return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
           c == 0x00A0 || c == 0x2009 || c == 0x200B;
}

inline char32_t to_lower_cp(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;         // Latin-1 uppercase
    if (c >= 0x100 && c <= 0x177 && (c % 2 == 0)) return c + 1;        // Latin Extended-A pairs
    if (c >= 0x179 && c <= 0x17E && (c % 2 == 1)) return c + 1;
    if (c == 0x178) return 0xFF;                                       // Ÿ
    return c;
}

namespace detail {

// Canonical composition for the combining marks that actually occur in
// the target corpora (Latin letters + common diacritics).
inline char32_t compose(char32_t base, char32_t mark) {
    struct Entry { char32_t base, mark, composed; };
    static const Entry table[] = {
        {U'a', 0x300, 0xE0}, {U'a', 0x301, 0xE1}, {U'a', 0x302, 0xE2}, {U'a', 0x303, 0xE3},
        {U'a', 0x308, 0xE4}, {U'a', 0x30A, 0xE5},
        {U'e', 0x300, 0xE8}, {U'e', 0x301, 0xE9}, {U'e', 0x302, 0xEA}, {U'e', 0x308, 0xEB},
        {U'i', 0x300, 0xEC}, {U'i', 0x301, 0xED}, {U'i', 0x302, 0xEE}, {U'i', 0x308, 0xEF},
        {U'o', 0x300, 0xF2}, {U'o', 0x301, 0xF3}, {U'o', 0x302, 0xF4}, {U'o', 0x303, 0xF5},
        {U'o', 0x308, 0xF6},
        {U'u', 0x300, 0xF9}, {U'u', 0x301, 0xFA}, {U'u', 0x302, 0xFB}, {U'u', 0x308, 0xFC},
        {U'n', 0x303, 0xF1}, {U'c', 0x327, 0xE7}, {U'y', 0x301, 0xFD}, {U'y', 0x308, 0xFF},
        {U'c', 0x301, 0x107}, {U'c', 0x30C, 0x10D}, {U's', 0x30C, 0x161}, {U'z', 0x30C, 0x17E},
        {U'z', 0x301, 0x17A}, {U'z', 0x307, 0x17C}, {U'r', 0x30C, 0x159}, {U'e', 0x30C, 0x11B},
        {U'g', 0x306, 0x11F}, {U's', 0x327, 0x15F}, {U'a', 0x306, 0x103}, {U'o', 0x30B, 0x151},
        {U'u', 0x30B, 0x171}, {U'd', 0x30C, 0x10F}, {U't', 0x30C, 0x165}, {U'n', 0x301, 0x144},
        {U'n', 0x30C, 0x148}, {U'l', 0x301, 0x13A}, {U'e', 0x328, 0x119}, {U'a', 0x328, 0x105},
        {U's', 0x301, 0x15B}, {U'u', 0x30A, 0x16F}, {U'e', 0x307, 0x117}, {U'i', 0x304, 0x12B},
        {U'a', 0x304, 0x101}, {U'e', 0x304, 0x113}, {U'o', 0x304, 0x14D}, {U'u', 0x304, 0x16B},
    };
    for (const auto& e : table) {
        if (e.base == base && e.mark == mark) return e.composed;
    }
    return 0;
}

}  // namespace detail

// Composes (base, combining mark) pairs into their precomposed form
// where a mapping exists; unknown marks are kept as-is.
inline std::u32string nfc_compose(std::u32string_view s) {
    std::u32string out;
    out.reserve(s.size());
    for (char32_t c : s) {
        if (!out.empty() && c >= 0x300 && c <= 0x36F) {
            if (char32_t composed = detail::compose(out.back(), c); composed != 0) {
                out.back() = composed;
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

// Canonical join key: lowercase, composed, whitespace collapsed and trimmed.
// Idempotent by construction.
inline std::string normalize_key(std::string_view s) {
    std::u32string cps = nfc_compose(utf8_decode(s));
    std::u32string out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t c : cps) {
        if (is_space_cp(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(U' ');
            pending_space = false;
        }
        out.push_back(to_lower_cp(c));
    }
    return utf8_encode(out);
}

// Splits on ASCII whitespace.
inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

}  // namespace tqa
