#include "quizgen/text.hpp"

namespace quizgen::text {

bool is_space(char c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}

bool is_blank(std::string_view s) noexcept {
    for (char c : s) {
        if (!is_space(c)) return false;
    }
    return true;
}

std::string_view trim(std::string_view s) noexcept {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) words.push_back(s.substr(start, i - start));
    }
    return words;
}

std::size_t count_words(std::string_view s) { return split_words(s).size(); }

std::string normalize_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (auto w : split_words(s)) {
        if (!out.empty()) out.push_back(' ');
        out.append(w);
    }
    return out;
}

std::string first_words(std::string_view s, std::size_t limit) {
    auto words = split_words(s);
    if (words.size() <= limit) return std::string(s);
    if (limit == 0) return {};
    const auto& last = words[limit - 1];
    return std::string(s.substr(0, static_cast<std::size_t>(last.data() - s.data()) + last.size()));
}

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

}  // namespace

std::size_t codepoint_length(std::string_view utf8) {
    std::size_t n = 0;
    for (char c : utf8) {
        if (!is_continuation(static_cast<unsigned char>(c))) ++n;
    }
    return n;
}

std::size_t byte_offset(std::string_view utf8, std::size_t cp_index) {
    std::size_t cp = 0;
    for (std::size_t i = 0; i < utf8.size(); ++i) {
        if (is_continuation(static_cast<unsigned char>(utf8[i]))) continue;
        if (cp == cp_index) return i;
        ++cp;
    }
    return cp == cp_index ? utf8.size() : std::string_view::npos;
}

bool is_valid_utf8(std::string_view s) noexcept {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + len > s.size()) return false;
        for (std::size_t k = 1; k < len; ++k) {
            auto cc = static_cast<unsigned char>(s[i + k]);
            if (!is_continuation(cc)) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // overlong forms, surrogates, out of range
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
            (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
            return false;
        }
        i += len;
    }
    return true;
}

}  // namespace quizgen::text
