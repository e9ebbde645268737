#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace rare::text {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    return out;
}

/// Collapse every whitespace run to a single space and trim the ends.
inline std::string collapse_ws(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_space(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

/// Verbatim containment up to whitespace differences (case-sensitive).
inline bool contains_ws_normalized(std::string_view haystack, std::string_view needle) {
    std::string h = collapse_ws(haystack);
    std::string n = collapse_ws(needle);
    if (n.empty()) return false;
    return h.find(n) != std::string::npos;
}

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        size_t b = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > b) out.emplace_back(s.substr(b, i - b));
    }
    return out;
}

inline std::vector<std::string> split_lines(std::string_view s) {
    std::vector<std::string> out;
    size_t b = 0;
    while (b <= s.size()) {
        size_t e = s.find('\n', b);
        if (e == std::string_view::npos) {
            out.emplace_back(s.substr(b));
            break;
        }
        std::string line(s.substr(b, e - b));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
        b = e + 1;
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

/// Matcher normalization: lowercase, punctuation dropped except separators
/// inside numbers ("94.8" and "1,000" keep their shape), whitespace collapsed.
inline std::string normalize_for_match(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if (std::isalnum(c) || c >= 0x80) {
            out.push_back(static_cast<char>(c));
        } else if ((c == '.' || c == ',') && i > 0 && i + 1 < s.size() &&
                   is_digit(s[i - 1]) && is_digit(s[i + 1])) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back(' ');
        }
    }
    return collapse_ws(out);
}

/// Symmetric substring test on matcher-normalized strings.
inline bool normalized_substring_either(std::string_view a, std::string_view b) {
    std::string na = normalize_for_match(a);
    std::string nb = normalize_for_match(b);
    if (na.empty() || nb.empty()) return na == nb && !na.empty();
    return na.find(nb) != std::string::npos || nb.find(na) != std::string::npos;
}

/// One-directional: normalized needle contained in normalized haystack.
inline bool normalized_contains(std::string_view haystack, std::string_view needle) {
    std::string h = normalize_for_match(haystack);
    std::string n = normalize_for_match(needle);
    if (n.empty()) return false;
    return h.find(n) != std::string::npos;
}

/// Locate `needle` in `haystack` tolerating whitespace-run differences.
/// Returns byte span [first, second) in haystack, or npos pair if absent.
inline std::pair<size_t, size_t> find_ws_tolerant(std::string_view haystack, std::string_view needle) {
    const size_t npos = std::string::npos;
    std::string n = collapse_ws(needle);
    if (n.empty()) return {npos, npos};
    for (size_t start = 0; start < haystack.size(); ++start) {
        if (is_space(haystack[start]) || haystack[start] != n[0]) continue;
        size_t h = start, j = 0;
        while (j < n.size() && h < haystack.size()) {
            if (n[j] == ' ') {
                if (!is_space(haystack[h])) break;
                while (h < haystack.size() && is_space(haystack[h])) ++h;
                ++j;
            } else {
                if (haystack[h] != n[j]) break;
                ++h;
                ++j;
            }
        }
        if (j == n.size()) return {start, h};
    }
    return {npos, npos};
}

/// Split into sentences on ./!/? followed by whitespace, keeping delimiters.
/// Newlines that end a line also terminate a sentence.
inline std::vector<std::string> split_sentences(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        cur.push_back(c);
        bool boundary = false;
        if ((c == '.' || c == '!' || c == '?') &&
            (i + 1 == s.size() || is_space(s[i + 1]))) {
            boundary = true;
        } else if (c == '\n') {
            boundary = true;
        }
        if (boundary) {
            std::string t = trim(cur);
            if (!t.empty()) out.push_back(std::move(t));
            cur.clear();
        }
    }
    std::string t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
    return out;
}

inline bool has_digit(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return is_digit(c); });
}

/// Token with leading/trailing ASCII punctuation stripped.
inline std::string strip_token_edges(std::string_view tok) {
    size_t b = 0, e = tok.size();
    auto is_word_char = [](unsigned char c) {
        return std::isalnum(c) || c >= 0x80;
    };
    while (b < e && !is_word_char(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(tok[e - 1]))) --e;
    return std::string(tok.substr(b, e - b));
}

} // namespace rare::text
