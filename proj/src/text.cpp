#include "egomem/text.hpp"

#include <cctype>

namespace egomem {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = lower(c);
    return out;
}

std::vector<std::string_view> whitespace_tokens(std::string_view s) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) tokens.push_back(s.substr(start, i - start));
    }
    return tokens;
}

int count_whitespace_tokens(std::string_view s) {
    return static_cast<int>(whitespace_tokens(s).size());
}

std::string truncate_to_tokens(std::string_view s, int max_tokens) {
    if (max_tokens <= 0) return "";
    auto tokens = whitespace_tokens(s);
    if (static_cast<int>(tokens.size()) <= max_tokens) return std::string(s);
    std::string out;
    for (int i = 0; i < max_tokens; ++i) {
        if (i > 0) out += ' ';
        out += tokens[static_cast<std::size_t>(i)];
    }
    return out;
}

bool contains_word_ci(std::string_view text, std::string_view word) {
    if (word.empty() || word.size() > text.size()) return false;
    for (std::size_t i = 0; i + word.size() <= text.size(); ++i) {
        bool match = true;
        for (std::size_t j = 0; j < word.size(); ++j) {
            if (lower(text[i + j]) != lower(word[j])) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        bool left_ok = i == 0 || !is_alnum(text[i - 1]);
        bool right_ok = i + word.size() == text.size() || !is_alnum(text[i + word.size()]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

}  // namespace egomem
