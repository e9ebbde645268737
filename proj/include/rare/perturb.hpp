#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rare/prompts.hpp"
#include "rare/providers.hpp"
#include "rare/qagen.hpp"
#include "rare/rng.hpp"
#include "rare/text.hpp"

namespace rare::perturb {

enum class QueryKind { original, char_level, word_level, grammar, irrelevant_info };

inline std::string to_string(QueryKind k) {
    switch (k) {
        case QueryKind::original: return "original";
        case QueryKind::char_level: return "char_level";
        case QueryKind::word_level: return "word_level";
        case QueryKind::grammar: return "grammar";
        case QueryKind::irrelevant_info: return "irrelevant_info";
    }
    return "original";
}

inline QueryKind query_kind_from_string(const std::string& s) {
    if (s == "original") return QueryKind::original;
    if (s == "char_level") return QueryKind::char_level;
    if (s == "word_level") return QueryKind::word_level;
    if (s == "grammar") return QueryKind::grammar;
    if (s == "irrelevant_info") return QueryKind::irrelevant_info;
    throw Error("unknown query perturbation kind: " + s);
}

enum class DocKind { ground_truth, answer_removed, back_translated };

inline std::string to_string(DocKind k) {
    switch (k) {
        case DocKind::ground_truth: return "ground_truth";
        case DocKind::answer_removed: return "answer_removed";
        case DocKind::back_translated: return "back_translated";
    }
    return "ground_truth";
}

inline DocKind doc_kind_from_string(const std::string& s) {
    if (s == "ground_truth") return DocKind::ground_truth;
    if (s == "answer_removed") return DocKind::answer_removed;
    if (s == "back_translated") return DocKind::back_translated;
    throw Error("unknown doc perturbation kind: " + s);
}

struct QueryVariant {
    std::string qa_id;
    QueryKind kind = QueryKind::original;
    std::string text;
    uint64_t seed = 0;

    json to_json() const {
        return json{{"qa_id", qa_id}, {"kind", to_string(kind)}, {"text", text}, {"seed", seed}};
    }
    static QueryVariant from_json(const json& j) {
        QueryVariant v;
        v.qa_id = j.at("qa_id").get<std::string>();
        v.kind = query_kind_from_string(j.at("kind").get<std::string>());
        v.text = j.at("text").get<std::string>();
        v.seed = j.value("seed", 0ull);
        return v;
    }
};

struct DocVariant {
    std::string qa_id;
    DocKind kind = DocKind::ground_truth;
    std::vector<std::pair<std::string, std::string>> chunks; // (chunk_id, text)
    bool answer_available = true;

    json to_json() const {
        json cs = json::array();
        for (const auto& [id, t] : chunks) cs.push_back(json{{"chunk_id", id}, {"text", t}});
        return json{{"qa_id", qa_id},
                    {"kind", to_string(kind)},
                    {"chunks", cs},
                    {"answer_available", answer_available}};
    }
    static DocVariant from_json(const json& j) {
        DocVariant v;
        v.qa_id = j.at("qa_id").get<std::string>();
        v.kind = doc_kind_from_string(j.at("kind").get<std::string>());
        for (const auto& c : j.at("chunks")) {
            v.chunks.emplace_back(c.at("chunk_id").get<std::string>(), c.at("text").get<std::string>());
        }
        v.answer_available = j.at("answer_available").get<bool>();
        return v;
    }
};

// ---------------------------------------------------------------------------
// Protected tokens: numerals and answer-critical strings survive verbatim
// ---------------------------------------------------------------------------

inline std::set<std::string> answer_token_set(const std::string& answer) {
    std::set<std::string> out;
    for (const auto& tok : text::split_ws(answer)) {
        std::string core = text::strip_token_edges(tok);
        if (!core.empty()) out.insert(text::lower(core));
    }
    return out;
}

inline bool is_protected_token(const std::string& token_core, const std::set<std::string>& answer_tokens) {
    if (token_core.empty()) return true; // nothing to edit anyway
    if (text::has_digit(token_core)) return true;
    return answer_tokens.count(text::lower(token_core)) > 0;
}

/// Core strings that must appear unchanged in every surface/LLM variant.
inline std::vector<std::string> protected_strings(const std::string& question, const std::string& answer) {
    auto answers = answer_token_set(answer);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& tok : text::split_ws(question)) {
        std::string core = text::strip_token_edges(tok);
        if (core.empty()) continue;
        if (is_protected_token(core, answers) && seen.insert(core).second) out.push_back(core);
    }
    return out;
}

inline bool preserves_protected(const std::string& variant, const std::vector<std::string>& prot) {
    for (const auto& p : prot) {
        if (variant.find(p) == std::string::npos) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Character-level perturbation
// ---------------------------------------------------------------------------

namespace detail {

inline const std::map<char, std::string>& qwerty_neighbors() {
    static const std::map<char, std::string> m = {
        {'q', "wa"},   {'w', "qes"},  {'e', "wrd"},  {'r', "etf"},  {'t', "ryg"},
        {'y', "tuh"},  {'u', "yij"},  {'i', "uok"},  {'o', "ipl"},  {'p', "ol"},
        {'a', "qsz"},  {'s', "awdx"}, {'d', "sefc"}, {'f', "drgv"}, {'g', "fthb"},
        {'h', "gyjn"}, {'j', "hukm"}, {'k', "jilm"}, {'l', "kop"},  {'z', "asx"},
        {'x', "zsdc"}, {'c', "xdfv"}, {'v', "cfgb"}, {'b', "vghn"}, {'n', "bhjm"},
        {'m', "njk"}};
    return m;
}

inline char keyboard_neighbor(char c, rng::Rng& rng) {
    bool upper = c >= 'A' && c <= 'Z';
    char lc = upper ? static_cast<char>(c - 'A' + 'a') : c;
    const auto& m = qwerty_neighbors();
    auto it = m.find(lc);
    char repl;
    if (it == m.end() || it->second.empty()) {
        repl = static_cast<char>('a' + rng.below(26));
    } else {
        repl = it->second[rng.below(it->second.size())];
    }
    return upper ? static_cast<char>(repl - 'a' + 'A') : repl;
}

struct TokenSpan {
    size_t begin = 0, end = 0;     // token extent in the working string
    size_t core_b = 0, core_e = 0; // without edge punctuation
};

inline std::vector<TokenSpan> token_spans(const std::string& s) {
    std::vector<TokenSpan> spans;
    size_t i = 0;
    auto is_word_char = [](unsigned char c) { return std::isalnum(c) || c >= 0x80; };
    while (i < s.size()) {
        while (i < s.size() && text::is_space(s[i])) ++i;
        size_t b = i;
        while (i < s.size() && !text::is_space(s[i])) ++i;
        if (i <= b) break;
        TokenSpan t{b, i, b, i};
        while (t.core_b < t.core_e && !is_word_char(static_cast<unsigned char>(s[t.core_b]))) ++t.core_b;
        while (t.core_e > t.core_b && !is_word_char(static_cast<unsigned char>(s[t.core_e - 1]))) --t.core_e;
        spans.push_back(t);
    }
    return spans;
}

inline bool ascii_alpha_core(const std::string& s, const TokenSpan& t) {
    if (t.core_e <= t.core_b) return false;
    for (size_t i = t.core_b; i < t.core_e; ++i) {
        if (!text::is_ascii_alpha(s[i])) return false;
    }
    return true;
}

} // namespace detail

/// Seeded character-level noise: k = max(1, ceil(0.05 * |q|)) edits drawn
/// from adjacent swap / delete / insert / keyboard-neighbor substitution,
/// confined to unprotected ASCII tokens of length >= 4.
inline std::optional<QueryVariant> perturb_char(const std::string& qa_id, const std::string& question,
                                                const std::string& answer, uint64_t seed) {
    auto answers = answer_token_set(answer);
    auto spans0 = detail::token_spans(question);
    std::vector<size_t> eligible;
    for (size_t i = 0; i < spans0.size(); ++i) {
        const auto& t = spans0[i];
        std::string core = question.substr(t.core_b, t.core_e - t.core_b);
        if (core.size() >= 4 && detail::ascii_alpha_core(question, t) &&
            !is_protected_token(core, answers)) {
            eligible.push_back(i);
        }
    }
    if (eligible.empty()) return std::nullopt; // NoPerturbableToken

    rng::Rng rng(seed);
    std::string work = question;
    size_t k = std::max<size_t>(1, (question.size() + 19) / 20); // ceil(0.05*n)

    for (size_t edit = 0; edit < k; ++edit) {
        auto spans = detail::token_spans(work);
        const auto& t = spans[eligible[rng.below(eligible.size())]];
        size_t blen = t.core_e - t.core_b;
        if (blen == 0) continue;
        int op = static_cast<int>(rng.below(4));
        if (op == 1 && blen < 3) op = 3; // keep tokens readable: no deletes below 3 chars
        switch (op) {
            case 0: { // adjacent swap, at a position where the chars differ
                if (blen < 2) {
                    work[t.core_b] = detail::keyboard_neighbor(work[t.core_b], rng);
                    break;
                }
                size_t tries = blen;
                size_t pos = t.core_b + rng.below(blen - 1);
                while (work[pos] == work[pos + 1] && tries-- > 0) {
                    pos = t.core_b + rng.below(blen - 1);
                }
                if (work[pos] != work[pos + 1]) {
                    std::swap(work[pos], work[pos + 1]);
                } else {
                    work[pos] = detail::keyboard_neighbor(work[pos], rng);
                }
                break;
            }
            case 1: { // delete
                size_t pos = t.core_b + rng.below(blen);
                work.erase(pos, 1);
                break;
            }
            case 2: { // insert a keyboard neighbor of the char at the slot
                size_t pos = t.core_b + rng.below(blen);
                work.insert(pos, 1, detail::keyboard_neighbor(work[pos], rng));
                break;
            }
            default: { // substitute
                size_t pos = t.core_b + rng.below(blen);
                char repl = detail::keyboard_neighbor(work[pos], rng);
                while (repl == work[pos]) repl = detail::keyboard_neighbor(work[pos], rng);
                work[pos] = repl;
                break;
            }
        }
    }
    if (work == question) { // edits cancelled out; force one visible change
        auto spans = detail::token_spans(work);
        const auto& t = spans[eligible[0]];
        work[t.core_b] = detail::keyboard_neighbor(work[t.core_b], rng);
        if (work == question) work[t.core_b] = work[t.core_b] == 'x' ? 'z' : 'x';
    }
    return QueryVariant{qa_id, QueryKind::char_level, work, seed};
}

// ---------------------------------------------------------------------------
// Word-level perturbation (synonyms with typo fallback)
// ---------------------------------------------------------------------------

class SynonymLexicon {
public:
    SynonymLexicon() = default;

    static SynonymLexicon load(const std::filesystem::path& path) {
        SynonymLexicon lex;
        for (const auto& line : text::split_lines(jsonl::read_text(path))) {
            if (line.empty() || line[0] == '#') continue;
            std::vector<std::string> cols;
            size_t b = 0;
            while (b <= line.size()) {
                size_t e = line.find('\t', b);
                if (e == std::string::npos) {
                    cols.push_back(line.substr(b));
                    break;
                }
                cols.push_back(line.substr(b, e - b));
                b = e + 1;
            }
            if (cols.size() < 2) continue;
            std::vector<std::string> syns;
            for (size_t i = 1; i < cols.size(); ++i) {
                std::string s = text::trim(cols[i]);
                if (!s.empty()) syns.push_back(s);
            }
            if (!syns.empty()) lex.map_[text::lower(text::trim(cols[0]))] = std::move(syns);
        }
        return lex;
    }

    void add(const std::string& word, std::vector<std::string> synonyms) {
        map_[text::lower(word)] = std::move(synonyms);
    }

    const std::vector<std::string>* find(const std::string& word) const {
        auto it = map_.find(text::lower(word));
        return it == map_.end() ? nullptr : &it->second;
    }

    bool empty() const { return map_.empty(); }

private:
    std::map<std::string, std::vector<std::string>> map_;
};

/// Replace 1-2 unprotected tokens with lexicon synonyms; tokens without an
/// entry get a word-level typo (one interior character dropped).
inline std::optional<QueryVariant> perturb_word(const std::string& qa_id, const std::string& question,
                                                const std::string& answer, uint64_t seed,
                                                const SynonymLexicon& lexicon) {
    auto answers = answer_token_set(answer);
    auto spans = detail::token_spans(question);
    std::vector<size_t> eligible;
    for (size_t i = 0; i < spans.size(); ++i) {
        const auto& t = spans[i];
        std::string core = question.substr(t.core_b, t.core_e - t.core_b);
        if (core.size() >= 4 && detail::ascii_alpha_core(question, t) &&
            !is_protected_token(core, answers)) {
            eligible.push_back(i);
        }
    }
    if (eligible.empty()) return std::nullopt;

    rng::Rng rng(seed);
    size_t replacements = std::min<size_t>(2, eligible.size());
    auto chosen = rng.sample(eligible, replacements);
    std::sort(chosen.begin(), chosen.end(), std::greater<size_t>()); // edit right-to-left

    std::string work = question;
    for (size_t token_idx : chosen) {
        const auto& t = spans[token_idx];
        std::string core = question.substr(t.core_b, t.core_e - t.core_b);
        std::string replacement;
        if (const auto* syns = lexicon.find(core)) {
            std::vector<std::string> usable;
            for (const auto& s : *syns) {
                if (text::split_ws(s).size() <= 2) usable.push_back(s); // token delta <= +1
            }
            if (!usable.empty()) replacement = usable[rng.below(usable.size())];
        }
        if (replacement.empty()) {
            // word-level typo: drop one interior character
            size_t pos = 1 + rng.below(core.size() - 2);
            replacement = core.substr(0, pos) + core.substr(pos + 1);
        } else if (std::isupper(static_cast<unsigned char>(core[0])) &&
                   std::islower(static_cast<unsigned char>(replacement[0]))) {
            replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
        }
        work.replace(t.core_b, core.size(), replacement);
    }
    if (work == question) return std::nullopt; // lexicon mapped a word to itself
    return QueryVariant{qa_id, QueryKind::word_level, work, seed};
}

// ---------------------------------------------------------------------------
// LLM-based perturbations with a meaning guard
// ---------------------------------------------------------------------------

struct LlmGuardConfig {
    double tau_query = 0.85;
    std::string embed_model;
};

inline std::optional<std::string> parse_text_response(const std::string& raw) {
    try {
        json parsed = providers::extract_json(raw);
        if (parsed.is_object() && parsed.contains("text") && parsed["text"].is_string()) {
            std::string t = text::trim(parsed["text"].get<std::string>());
            if (!t.empty()) return t;
        }
        return std::nullopt;
    } catch (const NoJsonFound&) {
        std::string t = text::trim(raw);
        if (t.empty()) return std::nullopt;
        return t; // tolerate bare-text replies; the guard still validates them
    }
}

/// Grammar rewrite or irrelevant-information addition. A variant is kept only
/// if it stays close in embedding space (cosine >= tau) and preserves every
/// protected string; one retry with a firmer instruction, then the variant is
/// omitted.
inline std::optional<QueryVariant> perturb_llm(const std::string& qa_id, const std::string& question,
                                               const std::string& answer, QueryKind kind,
                                               providers::ChatClient& chat, const std::string& chat_model,
                                               providers::EmbedClient& embedder,
                                               const LlmGuardConfig& guard) {
    if (kind != QueryKind::grammar && kind != QueryKind::irrelevant_info) {
        throw Error("perturb_llm expects grammar or irrelevant_info");
    }
    auto prot = protected_strings(question, answer);

    for (int attempt = 1; attempt <= 2; ++attempt) {
        providers::ChatRequest req;
        req.model = chat_model;
        req.system_prompt = kind == QueryKind::grammar ? prompts::grammar_perturb_system()
                                                       : prompts::irrelevant_info_system();
        req.user_prompt = question;
        if (attempt > 1) {
            req.user_prompt += "\n\n(Rewrite attempt 2: you MUST keep every number, year, and named "
                               "entity from the question exactly as written.)";
        }
        auto parsed = parse_text_response(chat.chat(req).text);
        if (!parsed) continue;
        if (!preserves_protected(*parsed, prot)) {
            log::debug("llm variant dropped a protected string (attempt ", attempt, ")");
            continue;
        }
        double cos = embedder.similarity(guard.embed_model, question, *parsed);
        if (cos < guard.tau_query) {
            log::debug("llm variant failed meaning guard: cos=", cos, " (attempt ", attempt, ")");
            continue;
        }
        return QueryVariant{qa_id, kind, *parsed, 0};
    }
    log::warn("guard failed for ", to_string(kind), " variant of ", qa_id, "; variant omitted");
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Document perturbations
// ---------------------------------------------------------------------------

namespace detail {

/// Case-insensitive, whitespace-tolerant location of `needle` in `haystack`.
inline std::pair<size_t, size_t> find_ci(const std::string& haystack, const std::string& needle) {
    return text::find_ws_tolerant(text::lower(haystack), text::lower(needle));
}

inline size_t erase_all_occurrences(std::string& work, const std::string& needle) {
    size_t removed = 0;
    for (;;) {
        auto [b, e] = text::find_ws_tolerant(work, needle);
        if (b == std::string::npos) break;
        work.erase(b, e - b);
        ++removed;
    }
    return removed;
}

inline size_t mask_all_occurrences(std::string& work, const std::string& needle,
                                   const std::string& mask = "[...]") {
    size_t masked = 0;
    for (;;) {
        auto [b, e] = find_ci(work, needle);
        if (b == std::string::npos) break;
        work.replace(b, e - b, mask);
        ++masked;
    }
    return masked;
}

} // namespace detail

/// Lexically-similar/answer-absent variant: delete every triplet source
/// sentence from its chunk, then mask any residual literal answer. Returns
/// nothing if a chunk would end up empty or the answer cannot be scrubbed.
inline std::optional<DocVariant> perturb_doc_remove_answer(const qagen::QAPair& qa,
                                                           const std::vector<Chunk>& gt_chunks) {
    DocVariant v;
    v.qa_id = qa.qa_id;
    v.kind = DocKind::answer_removed;
    v.answer_available = false;

    for (const auto& chunk : gt_chunks) {
        std::string work = chunk.text;
        for (const auto& t : qa.triplets) {
            if (t.answer_chunk_id != chunk.chunk_id) continue;
            detail::erase_all_occurrences(work, t.source_sentence);
        }
        detail::mask_all_occurrences(work, qa.answer);

        if (text::trim(work).empty()) {
            log::warn("answer_removed chunk became empty for ", qa.qa_id, "; variant omitted");
            return std::nullopt;
        }
        // single-hop hard invariant: the answer must be gone
        if (qa.kind == patterns::PatternKind::single_hop && text::normalized_contains(work, qa.answer)) {
            log::warn("could not scrub answer from ", chunk.chunk_id, " for ", qa.qa_id,
                      "; variant omitted");
            return std::nullopt;
        }
        v.chunks.emplace_back(chunk.chunk_id, std::move(work));
    }
    return v;
}

struct BacktranslateConfig {
    std::string pivot_language = "German";
    double tau_doc = 0.85;
    std::string embed_model;
    int max_attempts = 3; // initial + 2 retries, before the paraphrase fallback
};

namespace detail {

inline bool backtranslation_guard(const std::string& result, const qagen::QAPair& qa,
                                  const Chunk& chunk, providers::EmbedClient& embedder,
                                  const BacktranslateConfig& cfg) {
    if (text::normalized_contains(result, qa.answer)) return true;
    // fall back to sentence-level similarity against each source sentence
    auto result_sentences = text::split_sentences(result);
    if (result_sentences.empty()) return false;
    bool checked_any = false;
    for (const auto& t : qa.triplets) {
        if (t.answer_chunk_id != chunk.chunk_id) continue;
        checked_any = true;
        double best = -1.0;
        auto src = embedder.embed_single(cfg.embed_model, t.source_sentence);
        for (const auto& s : result_sentences) {
            auto cand = embedder.embed_single(cfg.embed_model, s);
            best = std::max(best, providers::cosine(src.values, cand.values));
        }
        if (best < cfg.tau_doc) return false;
    }
    return checked_any;
}

} // namespace detail

/// Lexically-different/answer-preserving variant via round-trip translation
/// through a pivot language, with a paraphrase fallback that pins the answer
/// phrase. Every chunk must pass the recoverability guard or the variant is
/// omitted.
inline std::optional<DocVariant> perturb_doc_backtranslate(const qagen::QAPair& qa,
                                                           const std::vector<Chunk>& gt_chunks,
                                                           providers::ChatClient& chat,
                                                           const std::string& chat_model,
                                                           providers::EmbedClient& embedder,
                                                           const BacktranslateConfig& cfg) {
    DocVariant v;
    v.qa_id = qa.qa_id;
    v.kind = DocKind::back_translated;
    v.answer_available = true;

    auto round_trip = [&](const std::string& src, int attempt) -> std::optional<std::string> {
        providers::ChatRequest fwd;
        fwd.model = chat_model;
        fwd.system_prompt = prompts::translate_system(cfg.pivot_language);
        fwd.user_prompt = src;
        if (attempt > 1) fwd.user_prompt += "\n\n(attempt " + std::to_string(attempt) + ")";
        auto mid = parse_text_response(chat.chat(fwd).text);
        if (!mid) return std::nullopt;

        providers::ChatRequest back;
        back.model = chat_model;
        back.system_prompt = prompts::translate_back_system(cfg.pivot_language);
        back.user_prompt = *mid;
        return parse_text_response(chat.chat(back).text);
    };

    for (const auto& chunk : gt_chunks) {
        std::optional<std::string> accepted;
        for (int attempt = 1; attempt <= cfg.max_attempts && !accepted; ++attempt) {
            auto result = round_trip(chunk.text, attempt);
            if (result && detail::backtranslation_guard(*result, qa, chunk, embedder, cfg)) {
                accepted = *result;
            }
        }
        if (!accepted) { // direct paraphrase pinning the answer phrase
            providers::ChatRequest req;
            req.model = chat_model;
            req.system_prompt = prompts::paraphrase_preserving_system(qa.answer);
            req.user_prompt = chunk.text;
            auto result = parse_text_response(chat.chat(req).text);
            if (result && detail::backtranslation_guard(*result, qa, chunk, embedder, cfg)) {
                accepted = *result;
            }
        }
        if (!accepted) {
            log::warn("back-translation guard exhausted for ", chunk.chunk_id, " of ", qa.qa_id,
                      "; variant omitted");
            return std::nullopt;
        }
        v.chunks.emplace_back(chunk.chunk_id, std::move(*accepted));
    }
    return v;
}

// ---------------------------------------------------------------------------
// JSONL helpers
// ---------------------------------------------------------------------------

inline void write_query_variants(const std::filesystem::path& path, const std::vector<QueryVariant>& vs) {
    std::vector<json> rows;
    rows.reserve(vs.size());
    for (const auto& v : vs) rows.push_back(v.to_json());
    jsonl::write_all(path, rows);
}

inline std::vector<QueryVariant> read_query_variants(const std::filesystem::path& path) {
    std::vector<QueryVariant> out;
    for (const auto& row : jsonl::read_all(path)) out.push_back(QueryVariant::from_json(row));
    return out;
}

inline void write_doc_variants(const std::filesystem::path& path, const std::vector<DocVariant>& vs) {
    std::vector<json> rows;
    rows.reserve(vs.size());
    for (const auto& v : vs) rows.push_back(v.to_json());
    jsonl::write_all(path, rows);
}

inline std::vector<DocVariant> read_doc_variants(const std::filesystem::path& path) {
    std::vector<DocVariant> out;
    for (const auto& row : jsonl::read_all(path)) out.push_back(DocVariant::from_json(row));
    return out;
}

} // namespace rare::perturb
