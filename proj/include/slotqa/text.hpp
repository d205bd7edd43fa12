#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace slotqa {

inline bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline char to_lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline bool is_alnum(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

inline std::string trim(std::string_view s) {
    size_t a = 0, b = s.size();
    while (a < b && is_space(s[a])) ++a;
    while (b > a && is_space(s[b - 1])) --b;
    return std::string(s.substr(a, b - a));
}

/// The global value normalization rule: lowercase, trim, collapse internal
/// whitespace runs to single spaces. Applied wherever slot values or
/// utterance text are compared or embedded in prompts; stored values stay
/// verbatim.
inline std::string normalize_value(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        if (is_space(c)) {
            if (!out.empty()) pending_space = true;
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(to_lower(c));
    }
    return out;
}

/// Retrieval tokenizer: lowercase, split on non-alphanumeric.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : s) {
        if (is_alnum(c)) {
            cur.push_back(to_lower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

/// Identifiers (domain and slot names) are [A-Za-z0-9_]+ so that the
/// "domain-slot" rendering can be split back unambiguously.
inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!is_alnum(c) && c != '_') return false;
    }
    return true;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

}  // namespace slotqa
