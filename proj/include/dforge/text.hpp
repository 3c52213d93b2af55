#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

namespace dforge::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Maximal runs of non-whitespace characters.
std::size_t word_count(std::string_view s);

// Number of UTF-8 code points (continuation bytes are not counted).
std::size_t codepoint_count(std::string_view s);

// Single left-to-right pass replacing `{name}` for every name in `values`.
// Unknown braces are kept verbatim and substituted text is never rescanned.
std::string interpolate(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace dforge::text
