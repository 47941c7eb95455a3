#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Whitespace and UTF-8 helpers shared by ingestion, concept validation and
// candidate deduplication. "Whitespace" here is the ASCII set
// (space, \t, \n, \v, \f, \r).
namespace quizgen::text {

bool is_space(char c) noexcept;

bool is_blank(std::string_view s) noexcept;

std::string_view trim(std::string_view s) noexcept;

std::vector<std::string_view> split_words(std::string_view s);

std::size_t count_words(std::string_view s);

/// Trims, then collapses every whitespace run to one ASCII space.
/// Case is preserved.
std::string normalize_whitespace(std::string_view s);

/// Prefix of `s` that ends at the last of its first `limit` words. Text with
/// `limit` words or fewer is returned unchanged.
std::string first_words(std::string_view s, std::size_t limit);

// Offsets exposed through the API count Unicode code points, not bytes.
std::size_t codepoint_length(std::string_view utf8);

/// Byte offset of the code point with index `cp_index`; returns
/// std::string_view::npos when `cp_index` is past the end.
std::size_t byte_offset(std::string_view utf8, std::size_t cp_index);

bool is_valid_utf8(std::string_view s) noexcept;

}  // namespace quizgen::text
