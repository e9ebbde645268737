#include <catch2/catch_amalgamated.hpp>

#include "rare/text.hpp"
#include "rare/tokenize.hpp"

using namespace rare;

TEST_CASE("collapse_ws flattens runs and trims") {
    CHECK(text::collapse_ws("  a \t b\n\nc ") == "a b c");
    CHECK(text::collapse_ws("") == "");
    CHECK(text::collapse_ws(" \n ") == "");
}

TEST_CASE("whitespace token count") {
    CHECK(whitespace_token_count("") == 0);
    CHECK(whitespace_token_count("a b c") == 3);
    CHECK(whitespace_token_count("  a   b  ") == 2);
    // monotone under concatenation
    std::string a = "one two three four five six seven eight nine ten";
    std::string b = "alpha beta gamma delta epsilon zeta eta theta iota kappa";
    CHECK(whitespace_token_count(a + " " + b) >=
          std::max(whitespace_token_count(a), whitespace_token_count(b)));
}

TEST_CASE("normalize_for_match") {
    CHECK(text::normalize_for_match("$94.8 billion") == "94.8 billion");
    CHECK(text::normalize_for_match("Free Public Transport!") == "free public transport");
    CHECK(text::normalize_for_match("1,000 units") == "1,000 units");
    CHECK(text::normalize_for_match("U.S. GDP") == "u s gdp");
    CHECK(text::normalize_for_match("solid-state") == "solid state");
}

TEST_CASE("normalized substring is symmetric and case/punct insensitive") {
    CHECK(text::normalized_substring_either("$94.8 billion", "94.8 billion"));
    CHECK(text::normalized_substring_either("Free public transport for all", "free public transport"));
    CHECK_FALSE(text::normalized_substring_either("alpha", "beta"));
    CHECK_FALSE(text::normalized_substring_either("", "beta"));
}

TEST_CASE("ws-tolerant containment") {
    CHECK(text::contains_ws_normalized("The quick\n brown  fox.", "quick brown fox"));
    CHECK_FALSE(text::contains_ws_normalized("The quick brown fox.", "quick red fox"));
    CHECK_FALSE(text::contains_ws_normalized("anything", ""));
}

TEST_CASE("find_ws_tolerant returns byte spans in the original") {
    std::string hay = "alpha  beta\n gamma delta";
    auto [b, e] = text::find_ws_tolerant(hay, "beta gamma");
    REQUIRE(b != std::string::npos);
    CHECK(hay.substr(b, e - b) == "beta\n gamma");
    auto missing = text::find_ws_tolerant(hay, "beta epsilon");
    CHECK(missing.first == std::string::npos);
}

TEST_CASE("sentence splitting") {
    auto s = text::split_sentences("First one. Second two! Third three? Tail without dot");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "First one.");
    CHECK(s[3] == "Tail without dot");
    // decimals do not split
    auto t = text::split_sentences("Revenue was $94.8 billion. Margin held.");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "Revenue was $94.8 billion.");
}
