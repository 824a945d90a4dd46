#ifndef ALIGNRU_UNICODE_HPP
#define ALIGNRU_UNICODE_HPP

// Thin UTF-8 / ICU helpers shared by the splitter and the tokenizers.

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace alignru::unicode {

using CodePoint = char32_t;

// Decodes the code point starting at `pos` and advances `pos`. Malformed
// sequences decode to U+FFFD and consume a single byte.
inline CodePoint next_code_point(std::string_view text, std::size_t& pos) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    auto i = static_cast<int32_t>(pos);
    UChar32 c = 0;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) {
        c = 0xFFFD;
    }
    pos = static_cast<std::size_t>(i);
    return static_cast<CodePoint>(c);
}

// Decodes the code point ending right before `pos` and moves `pos` back to its start.
inline CodePoint prev_code_point(std::string_view text, std::size_t& pos) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
    auto i = static_cast<int32_t>(pos);
    UChar32 c = 0;
    U8_PREV(bytes, 0, i, c);
    if (c < 0) {
        c = 0xFFFD;
    }
    pos = static_cast<std::size_t>(i);
    return static_cast<CodePoint>(c);
}

inline void append_utf8(std::string& out, CodePoint cp) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t n = 0;
    UBool error = false;
    U8_APPEND(buf, n, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
    if (error) {
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
}

inline bool is_space(CodePoint cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }
inline bool is_upper(CodePoint cp) { return u_isupper(static_cast<UChar32>(cp)); }
inline bool is_digit(CodePoint cp) { return u_isdigit(static_cast<UChar32>(cp)); }
inline bool is_alnum(CodePoint cp) { return u_isalnum(static_cast<UChar32>(cp)); }

inline int8_t category(CodePoint cp) { return u_charType(static_cast<UChar32>(cp)); }

inline bool is_opening_punct(CodePoint cp) {
    const auto c = category(cp);
    return c == U_START_PUNCTUATION || c == U_INITIAL_PUNCTUATION || cp == U'"' || cp == U'\'';
}

inline bool is_closing_punct(CodePoint cp) {
    const auto c = category(cp);
    return c == U_END_PUNCTUATION || c == U_FINAL_PUNCTUATION || cp == U'"' || cp == U'\'';
}

// Full Unicode lowercasing with root-locale rules.
inline std::string to_lower(std::string_view text) {
    auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    s.toLower(icu::Locale::getRoot());
    std::string out;
    s.toUTF8String(out);
    return out;
}

// Canonical decomposition followed by removal of non-spacing marks.
inline std::string strip_accents(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfd = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) {
        return std::string(text);
    }
    auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    icu::UnicodeString decomposed = nfd->normalize(s, status);
    if (U_FAILURE(status)) {
        return std::string(text);
    }
    icu::UnicodeString kept;
    for (int32_t i = 0; i < decomposed.length();) {
        const UChar32 c = decomposed.char32At(i);
        if (u_charType(c) != U_NON_SPACING_MARK) {
            kept.append(c);
        }
        i += U16_LENGTH(c);
    }
    std::string out;
    kept.toUTF8String(out);
    return out;
}

// Splits on Unicode White_Space; empty pieces are never produced.
inline std::vector<std::string_view> split_whitespace(std::string_view text) {
    std::vector<std::string_view> pieces;
    std::size_t pos = 0;
    std::size_t start = std::string_view::npos;
    while (pos < text.size()) {
        const std::size_t here = pos;
        const CodePoint cp = next_code_point(text, pos);
        if (is_space(cp)) {
            if (start != std::string_view::npos) {
                pieces.push_back(text.substr(start, here - start));
                start = std::string_view::npos;
            }
        } else if (start == std::string_view::npos) {
            start = here;
        }
    }
    if (start != std::string_view::npos) {
        pieces.push_back(text.substr(start));
    }
    return pieces;
}

inline bool is_blank(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (!is_space(next_code_point(text, pos))) {
            return false;
        }
    }
    return true;
}

inline std::size_t code_point_count(std::string_view text) {
    std::size_t n = 0;
    for (std::size_t pos = 0; pos < text.size(); ++n) {
        next_code_point(text, pos);
    }
    return n;
}

}  // namespace alignru::unicode

#endif  // ALIGNRU_UNICODE_HPP
