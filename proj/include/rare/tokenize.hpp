#pragma once

#include <functional>
#include <string_view>

#include "rare/text.hpp"

namespace rare {

/// Pluggable token estimator. Chunk budgets only need a rough calibration,
/// so the default counts whitespace-delimited words: cheap, deterministic,
/// and monotone under concatenation.
using TokenCounter = std::function<size_t(std::string_view)>;

inline size_t whitespace_token_count(std::string_view s) {
    size_t n = 0;
    bool in_tok = false;
    for (char c : s) {
        if (text::is_space(c)) {
            in_tok = false;
        } else if (!in_tok) {
            in_tok = true;
            ++n;
        }
    }
    return n;
}

inline TokenCounter default_token_counter() {
    return [](std::string_view s) { return whitespace_token_count(s); };
}

} // namespace rare
