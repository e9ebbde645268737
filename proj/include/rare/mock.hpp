#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "rare/hash.hpp"
#include "rare/perturb.hpp"
#include "rare/providers.hpp"
#include "rare/qagen.hpp"
#include "rare/text.hpp"

namespace rare::mock {

using providers::ChatBackend;
using providers::ChatRequest;
using providers::EmbedBackend;

// ---------------------------------------------------------------------------
// Embeddings: deterministic hashed bag-of-words
// ---------------------------------------------------------------------------

/// Token-count vectors hashed into a fixed dimension and L2-normalized.
/// Texts sharing most tokens land close together, so the meaning guards and
/// the retrieval ranking behave plausibly without a real model. Each model
/// name salts the hash, giving distinct vector spaces per "model".
class BowEmbedBackend : public EmbedBackend {
public:
    explicit BowEmbedBackend(size_t dim = 256) : dim_(dim) {}

    std::vector<double> embed_one(const std::string& model, const std::string& input) override {
        std::vector<double> v(dim_, 0.0);
        uint64_t salt = hash::fnv1a64(model);
        bool any = false;
        for (const auto& tok : text::split_ws(text::lower(input))) {
            std::string core = text::strip_token_edges(tok);
            if (core.empty()) continue;
            v[hash::fnv1a64(core, salt) % dim_] += 1.0;
            any = true;
        }
        if (!any) v[hash::fnv1a64("<empty>", salt) % dim_] = 1.0;
        double n = providers::norm(v);
        for (auto& x : v) x /= n;
        return v;
    }

private:
    size_t dim_;
};

/// Explicit vectors for chosen texts (to stage exact cosines in tests),
/// falling back to hashed bag-of-words.
class ScriptedEmbedBackend : public EmbedBackend {
public:
    void set(const std::string& text_key, std::vector<double> vec) {
        overrides_[text_key] = std::move(vec);
    }

    std::vector<double> embed_one(const std::string& model, const std::string& input) override {
        auto it = overrides_.find(input);
        if (it != overrides_.end()) return it->second;
        return fallback_.embed_one(model, input);
    }

private:
    std::map<std::string, std::vector<double>> overrides_;
    BowEmbedBackend fallback_;
};

// ---------------------------------------------------------------------------
// Chat: ad-hoc function backend and digest-keyed fixture backend
// ---------------------------------------------------------------------------

class FnChatBackend : public ChatBackend {
public:
    explicit FnChatBackend(std::function<std::string(const ChatRequest&)> fn) : fn_(std::move(fn)) {}
    std::string complete(const ChatRequest& req) override { return fn_(req); }

private:
    std::function<std::string(const ChatRequest&)> fn_;
};

/// Canned responses keyed by request digest, loaded from a JSONL file of
/// {"digest": ..., "response": ...} rows.
class JsonlChatBackend : public ChatBackend {
public:
    explicit JsonlChatBackend(const std::filesystem::path& path) {
        for (const auto& row : jsonl::read_all(path)) {
            responses_[row.at("digest").get<std::string>()] = row.at("response").get<std::string>();
        }
    }

    std::string complete(const ChatRequest& req) override {
        auto digest = providers::CacheKey::for_chat(req).digest;
        auto it = responses_.find(digest);
        if (it == responses_.end()) {
            throw ProviderUnavailable("no fixture response for digest " + digest);
        }
        return it->second;
    }

private:
    std::map<std::string, std::string> responses_;
};

// ---------------------------------------------------------------------------
// Rule-driven pipeline mock
// ---------------------------------------------------------------------------

/// What the mock generator does with a question (parsed from the model name
/// in mock mode: mock-echo / mock-refuse / mock-degraded).
enum class GeneratorMode { echo, refuse, degraded, none };

inline GeneratorMode generator_mode_from_model(const std::string& model) {
    if (model.find("echo") != std::string::npos) return GeneratorMode::echo;
    if (model.find("refuse") != std::string::npos) return GeneratorMode::refuse;
    if (model.find("degraded") != std::string::npos) return GeneratorMode::degraded;
    return GeneratorMode::none;
}

inline const std::vector<std::string>& default_relations() {
    static const std::vector<std::string> rels = {
        "faces challenges in", "aims to reduce", "expanded into", "partners with",
        "invests in",          "relies on",      "manufactures",  "produces",
        "develops",            "implemented",    "addresses",     "allocated",
        "supported",           "funds",          "operates",      "reported",
        "requires",            "serves",         "monitors",      "targets",
        "acquired",            "prioritizes",    "strengthens",   "drives"};
    return rels;
}

/// Offline stand-in for every LLM role in the pipeline, dispatched on system
/// prompt markers. Extraction parses a rigid "<entity> <relation> <entity>."
/// micro-grammar from the chunks themselves, QA writing and judging use fixed
/// templates, and perturbation/translation apply deterministic rewrites. The
/// generator modes look answers up from pipeline artifacts: echo always
/// answers correctly, refuse always declines, degraded answers correctly only
/// when the literal answer string is present in the provided context.
class RuleMockChat : public ChatBackend {
public:
    struct Options {
        std::vector<std::string> relations = default_relations();
        GeneratorMode generator_mode = GeneratorMode::none;
        std::filesystem::path qa_path;             // qa.accepted.jsonl (for generator lookup)
        std::filesystem::path query_variants_path; // query_variants.jsonl
    };

    RuleMockChat() = default;
    explicit RuleMockChat(Options opts) : opts_(std::move(opts)) {
        std::sort(opts_.relations.begin(), opts_.relations.end(),
                  [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
    }

    std::string complete(const ChatRequest& req) override {
        const std::string& sys = req.system_prompt;
        if (sys.find("extract structured triplets") != std::string::npos) {
            return extract_triplets(req.user_prompt);
        }
        if (sys.find("using a relation triplet") != std::string::npos) {
            return single_hop_qa(req.user_prompt);
        }
        if (sys.find("multi-hop retrieval questions") != std::string::npos) {
            return multi_hop_qa(req.user_prompt);
        }
        if (sys.find("Query Quality Evaluator") != std::string::npos) {
            return judge_scores(sys, req.user_prompt);
        }
        if (sys.find("different grammatical structure") != std::string::npos) {
            return grammar_rewrite(req.user_prompt);
        }
        if (sys.find("irrelevant information") != std::string::npos) {
            return irrelevant_add(req.user_prompt);
        }
        if (sys.find("Translate the following text to") != std::string::npos) {
            return translate_forward(req.user_prompt);
        }
        if (sys.find("text to English") != std::string::npos) {
            return translate_back(req.user_prompt);
        }
        if (sys.find("keep the exact phrase") != std::string::npos) {
            return json{{"text", swap_fillers(req.user_prompt)}}.dump();
        }
        if (sys.find("expert. You are given") != std::string::npos) {
            return generate(req.user_prompt);
        }
        throw ProviderUnavailable("mock has no rule for this prompt");
    }

private:
    Options opts_;
    std::mutex mu_;
    bool loaded_ = false;
    std::map<std::string, std::string> answer_by_question_;

    static std::string strip_attempt_suffix(const std::string& s) {
        auto pos = s.find("\n\n(");
        return text::trim(pos == std::string::npos ? s : s.substr(0, pos));
    }

    // --- extraction ---------------------------------------------------------

    std::string extract_triplets(const std::string& user) {
        json out = json::array();
        std::string cur_id;
        std::string cur_text;
        auto flush = [&] {
            if (cur_id.empty()) return;
            for (const auto& sentence : text::split_sentences(cur_text)) {
                emit_triplet(out, cur_id, sentence);
            }
            cur_id.clear();
            cur_text.clear();
        };
        for (const auto& line : text::split_lines(user)) {
            if (line.rfind("Chunk ID: ", 0) == 0) {
                flush();
                cur_id = text::trim(line.substr(10));
            } else if (!cur_id.empty()) {
                cur_text += line;
                cur_text += "\n";
            }
        }
        flush();
        return out.dump();
    }

    void emit_triplet(json& out, const std::string& chunk_id, const std::string& sentence) {
        if (sentence.empty() || sentence.back() != '.') return;
        for (const auto& rel : opts_.relations) {
            auto pos = sentence.find(" " + rel + " ");
            if (pos == std::string::npos) continue;
            std::string e1 = text::trim(sentence.substr(0, pos));
            std::string e2 = text::trim(sentence.substr(pos + rel.size() + 2));
            if (!e2.empty() && e2.back() == '.') e2.pop_back();
            e2 = text::trim(e2);
            if (e1.empty() || e2.empty()) return;
            if (text::split_ws(e1).size() > 6 || text::split_ws(e2).size() > 8) return;
            out.push_back(json{{"entity_1", e1},
                               {"relation", rel},
                               {"entity_2", e2},
                               {"answer_chunk_id", chunk_id},
                               {"source_sentence", sentence}});
            return; // one triplet per sentence
        }
    }

    // --- QA writing ---------------------------------------------------------

    static json first_json(const std::string& s) { return providers::extract_json(s); }

    std::string single_hop_qa(const std::string& user) {
        json triplet = first_json(user);
        std::string e1 = triplet.value("entity_1", "");
        std::string rel = triplet.value("relation", "");
        std::string e2 = triplet.value("entity_2", "");
        if (e1.find("vague") != std::string::npos || e2.find("vague") != std::string::npos) {
            return json{{"question", ""}, {"answer", ""}}.dump(); // prompt-side rejection
        }
        std::string year = parse_meta_year(user);
        std::string question = "What does " + e1 + " " + rel +
                               (year.empty() ? " according to the latest report"
                                             : " according to the " + year + " report") +
                               "?";
        return json{{"question", question}, {"answer", e2}}.dump();
    }

    std::string multi_hop_qa(const std::string& user) {
        json triplets = first_json(user);
        if (!triplets.is_array() || triplets.size() < 2) {
            return json{{"question", ""}, {"answer", ""}}.dump();
        }
        std::string kind;
        for (const auto& line : text::split_lines(user)) {
            if (line.rfind("Pattern: ", 0) == 0) kind = text::trim(line.substr(9));
        }
        const json& t_first = triplets[0];
        const json& t_last = triplets[triplets.size() - 1];
        std::string year = parse_meta_year(user);
        std::string when = year.empty() ? "in the period covered by the report" : "in " + year;

        std::string question, answer;
        if (kind == "chained") {
            // answer = C, pivot referenced through the first hop
            answer = t_last.value("entity_2", "");
            question = "Regarding what " + t_first.value("entity_1", "") + " " +
                       t_first.value("relation", "") + " " + when +
                       ", what does that intermediate factor ultimately " +
                       t_last.value("relation", "") + "?";
        } else if (kind == "star") {
            answer = t_last.value("entity_2", "");
            question = "Besides the entity it " + t_first.value("relation", "") + ", namely " +
                       t_first.value("entity_2", "") + ", what does the same organization also " +
                       t_last.value("relation", "") + " " + when + "?";
        } else { // inverted_star
            answer = t_last.value("entity_1", "");
            question = "Apart from " + t_first.value("entity_1", "") + ", which other party " +
                       t_last.value("relation", "") + " the same shared matter that " +
                       t_first.value("entity_1", "") + " " + t_first.value("relation", "") + " " +
                       when + "?";
        }
        if (answer.empty()) return json{{"question", ""}, {"answer", ""}}.dump();
        return json{{"question", question}, {"answer", answer}}.dump();
    }

    static std::string parse_meta_year(const std::string& user) {
        for (const auto& line : text::split_lines(user)) {
            if (line.rfind("- Year: ", 0) == 0) return text::trim(line.substr(8));
        }
        return "";
    }

    // --- judging ------------------------------------------------------------

    std::string judge_scores(const std::string& sys, const std::string& user) {
        bool multi = sys.find("Multi-Hop") != std::string::npos;
        bool low = user.find("LOWQUALITY") != std::string::npos;
        int base = low ? 2 : 4;
        json dims{{"clarity", base}, {"correctness", low ? 3 : 5}};
        if (multi) dims["reasonableness"] = base;
        double avg = multi ? (dims["reasonableness"].get<int>() + dims["clarity"].get<int>() +
                              dims["correctness"].get<int>()) /
                                 3.0
                           : (dims["clarity"].get<int>() + dims["correctness"].get<int>()) / 2.0;
        return json{{"score", avg}, {"dimension_scores", dims}}.dump();
    }

    // --- query perturbation -------------------------------------------------

    std::string grammar_rewrite(const std::string& user) {
        std::string q = strip_attempt_suffix(user);
        bool had_qmark = !q.empty() && q.back() == '?';
        if (had_qmark) q.pop_back();
        auto toks = text::split_ws(q);
        if (toks.size() > 2) {
            // rotate the leading word to the end: token multiset (and thus the
            // bag-of-words embedding) is unchanged
            std::string head = toks.front();
            toks.erase(toks.begin());
            head[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(head[0])));
            toks.push_back(head);
            toks.front()[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(toks.front()[0])));
        }
        std::string out = text::join(toks, " ") + (had_qmark ? "?" : "");
        return json{{"text", out}}.dump();
    }

    std::string irrelevant_add(const std::string& user) {
        std::string q = strip_attempt_suffix(user);
        return json{{"text", q + " Note the appendix."}}.dump();
    }

    // --- translation --------------------------------------------------------

    static const std::map<std::string, std::string>& filler_swaps() {
        static const std::map<std::string, std::string> m = {
            {"broadly", "widely"},   {"overall", "altogether"}, {"remains", "stays"},
            {"notably", "markedly"}, {"steadily", "gradually"}, {"meanwhile", "concurrently"},
            {"context", "setting"},  {"discusses", "covers"},   {"section", "part"}};
        return m;
    }

    static std::string swap_fillers(const std::string& s) {
        std::string out;
        auto toks = text::split_ws(s);
        for (size_t i = 0; i < toks.size(); ++i) {
            std::string core = text::lower(text::strip_token_edges(toks[i]));
            auto it = filler_swaps().find(core);
            if (i) out += " ";
            if (it != filler_swaps().end()) {
                // keep trailing punctuation around the swapped word
                std::string repl = it->second;
                if (std::isupper(static_cast<unsigned char>(toks[i][0]))) {
                    repl[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(repl[0])));
                }
                std::string tail;
                std::string stripped = text::strip_token_edges(toks[i]);
                auto pos = toks[i].rfind(stripped);
                if (pos != std::string::npos) tail = toks[i].substr(pos + stripped.size());
                out += repl + tail;
            } else {
                out += toks[i];
            }
        }
        return out;
    }

    std::string translate_forward(const std::string& user) {
        return json{{"text", "[de] " + strip_attempt_suffix(user)}}.dump();
    }

    std::string translate_back(const std::string& user) {
        std::string s = text::trim(user);
        if (s.rfind("[de] ", 0) == 0) s = s.substr(5);
        return json{{"text", swap_fillers(s)}}.dump();
    }

    // --- generation ---------------------------------------------------------

    void ensure_loaded() {
        std::lock_guard<std::mutex> lock(mu_);
        if (loaded_) return;
        loaded_ = true;
        if (!opts_.qa_path.empty() && std::filesystem::exists(opts_.qa_path)) {
            std::map<std::string, std::string> answer_by_id;
            for (const auto& row : jsonl::read_all(opts_.qa_path)) {
                answer_by_id[row.at("qa_id").get<std::string>()] = row.at("answer").get<std::string>();
                answer_by_question_[row.at("question").get<std::string>()] =
                    row.at("answer").get<std::string>();
            }
            if (!opts_.query_variants_path.empty() &&
                std::filesystem::exists(opts_.query_variants_path)) {
                for (const auto& row : jsonl::read_all(opts_.query_variants_path)) {
                    auto it = answer_by_id.find(row.at("qa_id").get<std::string>());
                    if (it != answer_by_id.end()) {
                        answer_by_question_[row.at("text").get<std::string>()] = it->second;
                    }
                }
            }
        }
    }

    std::string generate(const std::string& user) {
        if (opts_.generator_mode == GeneratorMode::refuse) {
            return json{{"cot_answer", "The provided context does not cover this."},
                        {"answer", "no such info"}}.dump();
        }
        ensure_loaded();

        std::string question, context;
        auto qpos = user.find("Question: ");
        if (qpos != std::string::npos) {
            auto end = user.find('\n', qpos);
            question = text::trim(user.substr(qpos + 10, end - qpos - 10));
        }
        auto cpos = user.find("Context:");
        if (cpos != std::string::npos) context = user.substr(cpos);

        auto it = answer_by_question_.find(question);
        std::string ref = it == answer_by_question_.end() ? "" : it->second;

        if (opts_.generator_mode == GeneratorMode::echo) {
            if (ref.empty()) {
                return json{{"cot_answer", "Unknown question."}, {"answer", "no such info"}}.dump();
            }
            return json{{"cot_answer", "The reference resolves this directly."}, {"answer", ref}}.dump();
        }
        // degraded: correct only when the literal answer string is in context
        if (!ref.empty() && !context.empty() && text::normalized_contains(context, ref)) {
            return json{{"cot_answer", "Found the answer verbatim in the context."}, {"answer", ref}}.dump();
        }
        return json{{"cot_answer", "Guessing without grounding."},
                    {"answer", "the records appear inconclusive on this point"}}.dump();
    }
};

/// Mock chat wired for a given provider role (mock mode of the CLI).
inline std::shared_ptr<ChatBackend> make_rule_mock(GeneratorMode mode,
                                                   const std::filesystem::path& qa_path = {},
                                                   const std::filesystem::path& variants_path = {}) {
    RuleMockChat::Options o;
    o.generator_mode = mode;
    o.qa_path = qa_path;
    o.query_variants_path = variants_path;
    return std::make_shared<RuleMockChat>(std::move(o));
}

} // namespace rare::mock
