#pragma once

#include <string>
#include <string_view>

namespace quizgen {

/// Porter (1980) suffix-stripping stemmer for lowercase English words.
/// Words shorter than three letters, or containing anything other than
/// a-z, are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace quizgen
