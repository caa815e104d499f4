#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace conceptrank {

/// Lowercases ASCII, trims, and collapses inner whitespace runs to one space.
/// Idempotent.
std::string canonicalize(std::string_view text);

/// Lowercase terms split on non-alphanumeric bytes; terms shorter than two
/// characters are dropped. No stemming.
std::vector<std::string> tokenize(std::string_view text);

/// Splits on `sep` without dropping empty fields.
std::vector<std::string> split(std::string_view text, char sep);

std::string_view trim(std::string_view text);

}  // namespace conceptrank
