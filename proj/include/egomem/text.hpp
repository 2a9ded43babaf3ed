#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace egomem {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Splits on runs of whitespace. The unit used for all context and
/// summary budgets.
std::vector<std::string_view> whitespace_tokens(std::string_view s);
int count_whitespace_tokens(std::string_view s);

/// Keeps the first `max_tokens` whitespace tokens. Returns the input
/// unchanged (including spacing) when it already fits; otherwise the
/// kept tokens joined by single spaces.
std::string truncate_to_tokens(std::string_view s, int max_tokens);

/// Case-insensitive whole-word containment: `word` must not be
/// flanked by alphanumeric characters ("Jake" never matches "Jakeson").
bool contains_word_ci(std::string_view text, std::string_view word);

}  // namespace egomem
