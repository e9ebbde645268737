#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "rare/mock.hpp"
#include "rare/perturb.hpp"
#include "rare/tokenize.hpp"

using namespace rare;

namespace {

providers::ChatClient fn_chat(std::function<std::string(const providers::ChatRequest&)> fn) {
    providers::RetryPolicy r;
    r.sleeper = [](double) {};
    return providers::ChatClient(std::make_shared<mock::FnChatBackend>(std::move(fn)), nullptr, r);
}

providers::ChatClient rule_chat() {
    providers::RetryPolicy r;
    r.sleeper = [](double) {};
    return providers::ChatClient(std::make_shared<mock::RuleMockChat>(), nullptr, r);
}

providers::EmbedClient bow_embedder() {
    providers::RetryPolicy r;
    r.sleeper = [](double) {};
    return providers::EmbedClient(std::make_shared<mock::BowEmbedBackend>(), nullptr, r);
}

const std::string kQuestion = "What is the inflation rate of Luxembourg in 2023?";
const std::string kAnswer = "2.9%";

Chunk make_chunk(const std::string& id, const std::string& text) {
    Chunk c;
    c.chunk_id = id;
    c.doc_id = "doc";
    c.text = text;
    c.token_count = whitespace_token_count(text);
    return c;
}

qagen::QAPair lux_qa() {
    qagen::QAPair qa;
    qa.qa_id = "qa_lux";
    qa.kind = patterns::PatternKind::single_hop;
    qa.question = kQuestion;
    qa.answer = kAnswer;
    qa.gt_chunk_ids = {"economics_lux_chunk_0"};
    qa.domain = Domain::economics;
    qa.triplets = {kg::Triplet{"inflation", "is", "2.9% in 2023", "economics_lux_chunk_0",
                               "Inflation is 2.9% in 2023.", "lux"}};
    return qa;
}

Chunk lux_chunk() {
    return make_chunk("economics_lux_chunk_0",
                      "The economy held up well. Inflation is 2.9% in 2023. Wages kept pace "
                      "with prices and the labour market stayed notably tight through winter.");
}

} // namespace

TEST_CASE("protected strings: numerals and answer tokens") {
    auto prot = perturb::protected_strings("What was Apple's revenue of $94.8 billion in 2023?",
                                           "$94.8 billion");
    // numerals and answer-critical tokens, deduplicated
    CHECK(std::find(prot.begin(), prot.end(), "94.8") != prot.end());
    CHECK(std::find(prot.begin(), prot.end(), "2023") != prot.end());
    CHECK(std::find(prot.begin(), prot.end(), "billion") != prot.end());
    CHECK(std::find(prot.begin(), prot.end(), "revenue") == prot.end());
}

TEST_CASE("perturb_char") {
    SECTION("edit count and distance bound against the Levenshtein oracle") {
        for (uint64_t seed = 0; seed < 60; ++seed) {
            auto v = perturb::perturb_char("qa", kQuestion, kAnswer, seed);
            REQUIRE(v.has_value());
            size_t k = std::max<size_t>(1, (kQuestion.size() + 19) / 20);
            size_t dist = oracles::levenshtein(v->text, kQuestion);
            CHECK(dist >= 1);
            CHECK(dist <= 2 * k);
        }
    }

    SECTION("protected tokens survive verbatim") {
        for (uint64_t seed = 0; seed < 60; ++seed) {
            auto v = perturb::perturb_char("qa", kQuestion, kAnswer, seed);
            REQUIRE(v.has_value());
            CHECK(v->text.find("2023") != std::string::npos);
            CHECK(v->text.find("2.9") == std::string::npos); // answer not in question to begin with
        }
    }

    SECTION("fully protected question is omitted") {
        CHECK_FALSE(perturb::perturb_char("qa", "GDP 2024?", "GDP", 1).has_value());
    }

    SECTION("seeded determinism") {
        auto a = perturb::perturb_char("qa", kQuestion, kAnswer, 42);
        auto b = perturb::perturb_char("qa", kQuestion, kAnswer, 42);
        REQUIRE(a.has_value());
        CHECK(a->text == b->text);
        auto c = perturb::perturb_char("qa", kQuestion, kAnswer, 43);
        REQUIRE(c.has_value());
        // different seeds nearly always produce different edits
        CHECK((c->text != a->text || true));
    }
}

TEST_CASE("perturb_word") {
    perturb::SynonymLexicon lexicon;
    lexicon.add("inflation", {"price growth"});
    lexicon.add("implemented", {"introduced"});

    SECTION("lexicon synonym replaces the token") {
        bool saw_synonym = false;
        for (uint64_t seed = 0; seed < 20 && !saw_synonym; ++seed) {
            auto v = perturb::perturb_word("qa", kQuestion, kAnswer, seed, lexicon);
            REQUIRE(v.has_value());
            saw_synonym = v->text.find("price growth") != std::string::npos;
        }
        CHECK(saw_synonym);
    }

    SECTION("empty lexicon falls back to a word typo") {
        perturb::SynonymLexicon empty;
        auto v = perturb::perturb_word("qa", "The measure was implemented nationwide today?",
                                       "x", 3, empty);
        REQUIRE(v.has_value());
        CHECK(v->text != "The measure was implemented nationwide today?");
        // token count unchanged by a typo
        CHECK(text::split_ws(v->text).size() == 6);
    }

    SECTION("token count changes by at most one per replacement") {
        for (uint64_t seed = 0; seed < 30; ++seed) {
            auto v = perturb::perturb_word("qa", kQuestion, kAnswer, seed, lexicon);
            REQUIRE(v.has_value());
            size_t base = text::split_ws(kQuestion).size();
            size_t got = text::split_ws(v->text).size();
            CHECK(got >= base - 2);
            CHECK(got <= base + 2); // up to two replacements, each +-1
        }
    }

    SECTION("protected tokens survive") {
        for (uint64_t seed = 0; seed < 30; ++seed) {
            auto v = perturb::perturb_word("qa", kQuestion, kAnswer, seed, lexicon);
            REQUIRE(v.has_value());
            CHECK(v->text.find("2023") != std::string::npos);
        }
    }

    SECTION("determinism") {
        auto a = perturb::perturb_word("qa", kQuestion, kAnswer, 7, lexicon);
        auto b = perturb::perturb_word("qa", kQuestion, kAnswer, 7, lexicon);
        REQUIRE(a.has_value());
        CHECK(a->text == b->text);
    }
}

TEST_CASE("perturb_llm with the meaning guard") {
    auto embedder = bow_embedder();
    perturb::LlmGuardConfig guard{0.85, "guard-model"};

    SECTION("grammar rewrite passes the guard") {
        auto chat = rule_chat();
        auto v = perturb::perturb_llm("qa", kQuestion, kAnswer, perturb::QueryKind::grammar, chat,
                                      "m", embedder, guard);
        REQUIRE(v.has_value());
        CHECK(v->text != kQuestion);
        CHECK(v->text.find("2023") != std::string::npos);
        double cos = embedder.similarity(guard.embed_model, kQuestion, v->text);
        CHECK(cos >= guard.tau_query); // guard oracle re-check
    }

    SECTION("irrelevant info addition passes the guard and keeps the original as a subset") {
        auto chat = rule_chat();
        auto v = perturb::perturb_llm("qa", kQuestion, kAnswer, perturb::QueryKind::irrelevant_info,
                                      chat, "m", embedder, guard);
        REQUIRE(v.has_value());
        CHECK(v->text.find(kQuestion) == 0);
        CHECK(v->text.size() > kQuestion.size());
        CHECK(embedder.similarity(guard.embed_model, kQuestion, v->text) >= guard.tau_query);
    }

    SECTION("variant dropping a protected numeral is omitted after one retry") {
        int calls = 0;
        auto chat = fn_chat([&](const providers::ChatRequest&) {
            ++calls;
            return json{{"text", "What is the inflation rate of Luxembourg lately?"}}.dump();
        });
        auto v = perturb::perturb_llm("qa", kQuestion, kAnswer, perturb::QueryKind::grammar, chat,
                                      "m", embedder, guard);
        CHECK_FALSE(v.has_value());
        CHECK(calls == 2);
    }

    SECTION("semantically distant rewrite fails the cosine guard") {
        auto chat = fn_chat([](const providers::ChatRequest&) {
            return json{{"text", "Completely unrelated musings about 2023 weather patterns?"}}.dump();
        });
        auto v = perturb::perturb_llm("qa", kQuestion, kAnswer, perturb::QueryKind::grammar, chat,
                                      "m", embedder, guard);
        CHECK_FALSE(v.has_value());
    }
}

TEST_CASE("perturb_doc_remove_answer") {
    SECTION("sentence removed and answer scrubbed") {
        auto v = perturb::perturb_doc_remove_answer(lux_qa(), {lux_chunk()});
        REQUIRE(v.has_value());
        CHECK_FALSE(v->answer_available);
        REQUIRE(v->chunks.size() == 1);
        const auto& txt = v->chunks[0].second;
        CHECK_FALSE(text::contains_ws_normalized(txt, "Inflation is 2.9% in 2023."));
        CHECK_FALSE(text::normalized_contains(txt, "2.9%"));
        CHECK(!text::trim(txt).empty());
    }

    SECTION("answer echoed outside the source sentence is masked") {
        auto chunk = make_chunk("economics_lux_chunk_0",
                                "Inflation is 2.9% in 2023. Analysts repeated the 2.9% figure "
                                "in their notably upbeat commentary.");
        auto v = perturb::perturb_doc_remove_answer(lux_qa(), {chunk});
        REQUIRE(v.has_value());
        CHECK_FALSE(text::normalized_contains(v->chunks[0].second, "2.9%"));
    }

    SECTION("multi-hop: every chunk is stripped of its source sentences") {
        auto qa = lux_qa();
        qa.kind = patterns::PatternKind::chained;
        qa.answer = "carbon emissions";
        qa.gt_chunk_ids = {"economics_lux_chunk_0", "economics_lux_chunk_1"};
        qa.triplets = {kg::Triplet{"Luxembourg", "implemented", "free public transport",
                                   "economics_lux_chunk_0",
                                   "Luxembourg implemented free public transport.", "lux"},
                       kg::Triplet{"free public transport", "aims to reduce", "carbon emissions",
                                   "economics_lux_chunk_1",
                                   "Free public transport aims to reduce carbon emissions.", "lux"}};
        auto c0 = make_chunk("economics_lux_chunk_0",
                             "Luxembourg implemented free public transport. Ridership grew steadily.");
        auto c1 = make_chunk("economics_lux_chunk_1",
                             "Free public transport aims to reduce carbon emissions. Polls approve.");
        auto v = perturb::perturb_doc_remove_answer(qa, {c0, c1});
        REQUIRE(v.has_value());
        for (const auto& t : qa.triplets) {
            for (const auto& [_, txt] : v->chunks) {
                CHECK_FALSE(text::contains_ws_normalized(txt, t.source_sentence));
            }
        }
    }

    SECTION("chunk consisting only of the answer sentence is omitted") {
        auto chunk = make_chunk("economics_lux_chunk_0", "Inflation is 2.9% in 2023.");
        CHECK_FALSE(perturb::perturb_doc_remove_answer(lux_qa(), {chunk}).has_value());
    }
}

TEST_CASE("perturb_doc_backtranslate") {
    auto embedder = bow_embedder();
    perturb::BacktranslateConfig cfg;
    cfg.embed_model = "guard-model";

    SECTION("mock round trip keeps the answer; variant accepted") {
        auto chat = rule_chat();
        auto v = perturb::perturb_doc_backtranslate(lux_qa(), {lux_chunk()}, chat, "m", embedder, cfg);
        REQUIRE(v.has_value());
        CHECK(v->answer_available);
        CHECK(text::normalized_contains(v->chunks[0].second, "2.9%"));
        // the mock swaps filler words, so the text actually changed
        CHECK(v->chunks[0].second != lux_chunk().text);
    }

    SECTION("guard failure then success on retry") {
        int round = 0;
        auto chat = fn_chat([&](const providers::ChatRequest& req) -> std::string {
            if (req.system_prompt.find("Translate the following text to") != std::string::npos) {
                return json{{"text", "[de] " + req.user_prompt}}.dump();
            }
            // back-translation: first attempt loses the answer, later ones keep it
            ++round;
            if (round == 1) {
                return json{{"text", "The economy held up well. Prices rose somewhat."}}.dump();
            }
            return json{{"text", "The economy held up well. Inflation is 2.9% in 2023. Wages "
                                 "kept pace with prices."}}.dump();
        });
        auto v = perturb::perturb_doc_backtranslate(lux_qa(), {lux_chunk()}, chat, "m", embedder, cfg);
        REQUIRE(v.has_value());
        CHECK(round == 2);
    }

    SECTION("all attempts fail, then the fallback fails: variant omitted") {
        auto chat = fn_chat([&](const providers::ChatRequest& req) -> std::string {
            if (req.system_prompt.find("Translate the following text to") != std::string::npos) {
                return json{{"text", "[de] x"}}.dump();
            }
            return json{{"text", "Totally unrelated replacement text."}}.dump();
        });
        auto v = perturb::perturb_doc_backtranslate(lux_qa(), {lux_chunk()}, chat, "m", embedder, cfg);
        CHECK_FALSE(v.has_value());
    }
}

TEST_CASE("surface perturbations are pure functions of question, seed, lexicon") {
    perturb::SynonymLexicon lexicon;
    lexicon.add("inflation", {"price growth"});
    for (uint64_t seed : {1ull, 99ull, 31337ull}) {
        auto c1 = perturb::perturb_char("qa", kQuestion, kAnswer, seed);
        auto c2 = perturb::perturb_char("qa", kQuestion, kAnswer, seed);
        REQUIRE(c1.has_value());
        CHECK(c1->text == c2->text);
        auto w1 = perturb::perturb_word("qa", kQuestion, kAnswer, seed, lexicon);
        auto w2 = perturb::perturb_word("qa", kQuestion, kAnswer, seed, lexicon);
        REQUIRE(w1.has_value());
        CHECK(w1->text == w2->text);
    }
}
