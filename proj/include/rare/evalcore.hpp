#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rare/perturb.hpp"
#include "rare/prompts.hpp"
#include "rare/providers.hpp"
#include "rare/qagen.hpp"
#include "rare/retrieval.hpp"

namespace rare::evalcore {

// ---------------------------------------------------------------------------
// Answer generation (phi)
// ---------------------------------------------------------------------------

struct GenerationRecord {
    std::string qa_id;
    std::string query_kind;               // original / char_level / ...
    std::string doc_kind;                 // closed_book / ground_truth / answer_removed /
                                          // back_translated / retrieval:<model>
    std::vector<std::string> context_chunk_ids;
    std::string cot_answer;
    std::string answer;                   // parsed short answer only
    std::string generator_model;
    bool parse_failed = false;
    bool cached = false;

    json to_json() const {
        return json{{"qa_id", qa_id},
                    {"query_kind", query_kind},
                    {"doc_kind", doc_kind},
                    {"context_chunk_ids", context_chunk_ids},
                    {"cot_answer", cot_answer},
                    {"answer", answer},
                    {"generator_model", generator_model},
                    {"parse_failed", parse_failed}};
    }
};

/// Run the generator over a question plus (possibly empty) context. Closed
/// book means no context at all. Unparseable output keeps the raw text as
/// the answer with a parse-failure flag rather than scoring it zero outright.
inline GenerationRecord generate_answer(const std::string& question,
                                        const std::vector<std::string>& context_texts,
                                        const std::vector<std::string>& context_chunk_ids,
                                        Domain domain, providers::ChatClient& chat,
                                        const std::string& model) {
    providers::ChatRequest req;
    req.model = model;
    req.system_prompt = context_texts.empty() ? prompts::generator_closed_book_system(domain)
                                              : prompts::generator_system(domain);
    req.user_prompt = prompts::generator_user(question, context_texts);
    auto resp = chat.chat(req);

    GenerationRecord rec;
    rec.context_chunk_ids = context_chunk_ids;
    rec.generator_model = model;
    rec.cached = resp.cached;
    try {
        json parsed = providers::extract_json(resp.text);
        if (parsed.is_object() && parsed.contains("answer") && parsed["answer"].is_string()) {
            rec.answer = text::trim(parsed["answer"].get<std::string>());
            rec.cot_answer = parsed.value("cot_answer", "");
        } else {
            rec.answer = text::trim(resp.text);
            rec.parse_failed = true;
        }
    } catch (const NoJsonFound&) {
        rec.answer = text::trim(resp.text);
        rec.parse_failed = true;
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Two-stage answer matching
// ---------------------------------------------------------------------------

enum class MatchStage { exact_substring, embedding, none };

inline std::string to_string(MatchStage s) {
    switch (s) {
        case MatchStage::exact_substring: return "exact_substring";
        case MatchStage::embedding: return "embedding";
        case MatchStage::none: return "none";
    }
    return "none";
}

struct MatchResult {
    bool matched = false;
    MatchStage stage = MatchStage::none;
    bool provider_error = false;
};

struct MatcherConfig {
    double threshold = 0.9; // stage-2 cosine must exceed this (strict >)
    std::string embed_model;
};

/// Stage 1: normalized equality or symmetric substring containment.
/// Stage 2: embedding cosine strictly above the threshold. A null embedder
/// disables stage 2 (surface-only matching).
inline MatchResult match_answer(const std::string& pred, const std::string& ref,
                                providers::EmbedClient* embedder, const MatcherConfig& cfg = {}) {
    std::string np = text::normalize_for_match(pred);
    std::string nr = text::normalize_for_match(ref);
    if (np.empty() || nr.empty()) return {false, MatchStage::none, false};
    if (np == nr || np.find(nr) != std::string::npos || nr.find(np) != std::string::npos) {
        return {true, MatchStage::exact_substring, false};
    }
    if (embedder) {
        try {
            double cos = embedder->similarity(cfg.embed_model, pred, ref);
            if (cos > cfg.threshold) return {true, MatchStage::embedding, false};
        } catch (const std::exception& e) {
            log::warn("stage-2 matcher unavailable: ", e.what());
            return {false, MatchStage::none, true};
        }
    }
    return {false, MatchStage::none, false};
}

inline const std::vector<std::string>& default_refusals() {
    static const std::vector<std::string> r = {"no such info"};
    return r;
}

inline bool is_refusal(const std::string& pred,
                       const std::vector<std::string>& refusals = default_refusals()) {
    std::string np = text::normalize_for_match(pred);
    for (const auto& phrase : refusals) {
        std::string n = text::normalize_for_match(phrase);
        if (!n.empty() && np.find(n) != std::string::npos) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Robustness judge f
// ---------------------------------------------------------------------------

struct JudgeVerdict {
    std::string qa_id;
    std::string generator;
    std::string query_kind;
    std::string doc_kind;
    bool matched = false;
    bool refused = false;
    bool answer_available = false;
    bool closed_book_correct = false;
    int f = 0;        // under the active mode
    int f_strict = 0;
    int f_lenient = 0;
    std::string match_stage = "none";

    json to_json() const {
        return json{{"qa_id", qa_id},
                    {"generator", generator},
                    {"query_kind", query_kind},
                    {"doc_kind", doc_kind},
                    {"matched", matched},
                    {"refused", refused},
                    {"answer_available", answer_available},
                    {"closed_book_correct", closed_book_correct},
                    {"f", f},
                    {"f_strict", f_strict},
                    {"f_lenient", f_lenient},
                    {"match_stage", match_stage}};
    }
    static JudgeVerdict from_json(const json& j) {
        JudgeVerdict v;
        v.qa_id = j.at("qa_id").get<std::string>();
        v.generator = j.value("generator", "");
        v.query_kind = j.at("query_kind").get<std::string>();
        v.doc_kind = j.at("doc_kind").get<std::string>();
        v.matched = j.at("matched").get<bool>();
        v.refused = j.at("refused").get<bool>();
        v.answer_available = j.at("answer_available").get<bool>();
        v.closed_book_correct = j.at("closed_book_correct").get<bool>();
        v.f = j.at("f").get<int>();
        v.f_strict = j.value("f_strict", v.f);
        v.f_lenient = j.value("f_lenient", v.f);
        v.match_stage = j.value("match_stage", "none");
        return v;
    }
};

/// The decision table. With internal knowledge (closed-book correct) the
/// system must keep answering correctly under every perturbation. Without
/// it: answer correctly when the context carries the answer, otherwise
/// refuse. Strict mode scores a lucky correct guess in the unanswerable
/// cell as 0; lenient mode accepts match-or-refusal there.
inline int judge_bits(bool matched, bool refused, bool answer_available, bool closed_book_correct,
                      bool lenient) {
    if (closed_book_correct) return matched ? 1 : 0;
    if (answer_available) return matched ? 1 : 0;
    if (lenient) return (matched || refused) ? 1 : 0;
    return refused ? 1 : 0;
}

/// Full judge over prediction text: refusal detection first (a refusal is
/// never a content match), then the two-stage matcher.
inline JudgeVerdict judge(const std::string& pred, const std::string& ref, bool answer_available,
                          bool closed_book_correct, providers::EmbedClient* embedder,
                          const MatcherConfig& match_cfg = {}, bool lenient = false,
                          const std::vector<std::string>& refusals = default_refusals()) {
    JudgeVerdict v;
    v.answer_available = answer_available;
    v.closed_book_correct = closed_book_correct;
    v.refused = is_refusal(pred, refusals);
    if (v.refused) {
        v.matched = false;
        v.match_stage = to_string(MatchStage::none);
    } else {
        auto m = match_answer(pred, ref, embedder, match_cfg);
        v.matched = m.matched;
        v.match_stage = to_string(m.stage);
    }
    v.f_strict = judge_bits(v.matched, v.refused, answer_available, closed_book_correct, false);
    v.f_lenient = judge_bits(v.matched, v.refused, answer_available, closed_book_correct, true);
    v.f = lenient ? v.f_lenient : v.f_strict;
    return v;
}

// ---------------------------------------------------------------------------
// Robustness metrics over one question's verdict grid
// ---------------------------------------------------------------------------

inline bool is_retrieval_doc_kind(const std::string& doc_kind) {
    return doc_kind.rfind("retrieval:", 0) == 0;
}

/// Mean f over the full Q x D grid, where D is the set of ground-truth
/// derived documents (real-world retrieval is reported separately unless
/// folded in for ablation). Every (query, doc) cell must be graded.
inline double overall_robustness(const std::vector<JudgeVerdict>& verdicts,
                                 bool fold_in_retrieval = false) {
    std::set<std::string> query_kinds, doc_kinds;
    std::map<std::string, double> cell; // "q|d" -> f
    for (const auto& v : verdicts) {
        bool retr = is_retrieval_doc_kind(v.doc_kind);
        if (retr && !fold_in_retrieval) continue;
        if (retr && v.query_kind != "original") continue;
        query_kinds.insert(v.query_kind);
        doc_kinds.insert(v.doc_kind);
        cell["" + v.query_kind + "|" + v.doc_kind] = v.f;
    }
    if (query_kinds.empty() || doc_kinds.empty()) {
        throw IncompleteGrid("no verdicts for overall robustness");
    }
    double sum = 0;
    size_t n = 0;
    for (const auto& q : query_kinds) {
        for (const auto& d : doc_kinds) {
            if (is_retrieval_doc_kind(d) && q != "original") continue; // retrieval graded on q only
            auto it = cell.find(q + "|" + d);
            if (it == cell.end()) throw IncompleteGrid("missing grid cell (" + q + ", " + d + ")");
            sum += it->second;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

/// Mean f over perturbed queries against the fixed ground-truth document.
/// The original query is excluded unless explicitly included.
inline double query_robustness(const std::vector<JudgeVerdict>& verdicts,
                               bool include_original = false) {
    double sum = 0;
    size_t n = 0;
    for (const auto& v : verdicts) {
        if (v.doc_kind != "ground_truth") continue;
        if (!include_original && v.query_kind == "original") continue;
        sum += v.f;
        ++n;
    }
    if (n == 0) throw IncompleteGrid("no query-perturbation verdicts");
    return sum / static_cast<double>(n);
}

/// Mean f over document perturbations with the fixed original query.
inline double document_robustness(const std::vector<JudgeVerdict>& verdicts) {
    double sum = 0;
    size_t n = 0;
    for (const auto& v : verdicts) {
        if (v.query_kind != "original") continue;
        if (v.doc_kind != "answer_removed" && v.doc_kind != "back_translated") continue;
        sum += v.f;
        ++n;
    }
    if (n == 0) throw IncompleteGrid("no document-perturbation verdicts");
    return sum / static_cast<double>(n);
}

/// Mean f over the per-embedding-model top-3 retrieval contexts.
inline double retrieval_robustness(const std::vector<JudgeVerdict>& verdicts) {
    double sum = 0;
    size_t n = 0;
    for (const auto& v : verdicts) {
        if (v.query_kind != "original" || !is_retrieval_doc_kind(v.doc_kind)) continue;
        sum += v.f;
        ++n;
    }
    if (n == 0) throw IncompleteGrid("no retrieval verdicts");
    return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Per-question grid evaluation
// ---------------------------------------------------------------------------

struct EvalOptions {
    bool lenient = false;
    bool include_original_in_query = false;
    bool fold_retrieval_into_overall = false;
    MatcherConfig matcher;
    std::vector<std::string> refusals = default_refusals();
};

struct QaMetrics {
    std::string qa_id;
    std::string generator;
    Domain domain = Domain::other;
    bool multi_hop = false;
    bool closed_book_correct = false;
    double overall = 0, query = 0, document = 0, retrieval = 0;

    json to_json() const {
        return json{{"qa_id", qa_id},
                    {"generator", generator},
                    {"domain", rare::to_string(domain)},
                    {"multi_hop", multi_hop},
                    {"closed_book_correct", closed_book_correct},
                    {"overall", overall},
                    {"query", query},
                    {"document", document},
                    {"retrieval", retrieval}};
    }
};

struct QaGridInputs {
    qagen::QAPair qa;
    std::vector<perturb::QueryVariant> query_variants;      // includes the original
    std::vector<perturb::DocVariant> doc_variants;          // includes ground_truth
    std::vector<retrieval::RetrievalSet> retrieval_sets;    // one per embedding model
    const std::map<std::string, const Chunk*>* chunks_by_id = nullptr;
};

struct QaGridResult {
    std::vector<GenerationRecord> generations;
    std::vector<JudgeVerdict> verdicts;
    QaMetrics metrics;
};

/// Evaluate one question's full perturbation grid for one generator.
/// The closed-book record is produced once and its correctness bit reused
/// across every cell.
inline QaGridResult evaluate_qa_grid(const QaGridInputs& in, providers::ChatClient& generator,
                                     const std::string& generator_model,
                                     providers::EmbedClient* matcher_embedder,
                                     const EvalOptions& opts) {
    QaGridResult out;
    const auto& qa = in.qa;

    auto run = [&](const std::string& question, const std::vector<std::string>& texts,
                   const std::vector<std::string>& ids, const std::string& query_kind,
                   const std::string& doc_kind) -> GenerationRecord& {
        auto rec = generate_answer(question, texts, ids, qa.domain, generator, generator_model);
        rec.qa_id = qa.qa_id;
        rec.query_kind = query_kind;
        rec.doc_kind = doc_kind;
        out.generations.push_back(std::move(rec));
        return out.generations.back();
    };

    // closed book: computed exactly once per (qa, generator)
    auto& cb_rec = run(qa.question, {}, {}, "original", "closed_book");
    bool cb_refused = is_refusal(cb_rec.answer, opts.refusals);
    bool cb_correct = !cb_refused &&
                      match_answer(cb_rec.answer, qa.answer, matcher_embedder, opts.matcher).matched;

    auto grade = [&](const GenerationRecord& rec, bool available) {
        JudgeVerdict v = judge(rec.answer, qa.answer, available, cb_correct, matcher_embedder,
                               opts.matcher, opts.lenient, opts.refusals);
        v.qa_id = qa.qa_id;
        v.generator = generator_model;
        v.query_kind = rec.query_kind;
        v.doc_kind = rec.doc_kind;
        out.verdicts.push_back(std::move(v));
    };

    // Q x D over ground-truth-derived documents
    for (const auto& qv : in.query_variants) {
        for (const auto& dv : in.doc_variants) {
            std::vector<std::string> texts, ids;
            for (const auto& [cid, t] : dv.chunks) {
                ids.push_back(cid);
                texts.push_back(t);
            }
            auto& rec = run(qv.text, texts, ids, perturb::to_string(qv.kind),
                            perturb::to_string(dv.kind));
            grade(rec, dv.answer_available);
        }
    }

    // real-world retrieval contexts, original query only
    for (const auto& rs : in.retrieval_sets) {
        std::vector<std::string> texts, ids;
        for (const auto& cid : rs.chunk_ids) {
            ids.push_back(cid);
            if (in.chunks_by_id) {
                auto it = in.chunks_by_id->find(cid);
                if (it != in.chunks_by_id->end()) texts.push_back(it->second->text);
            }
        }
        auto& rec = run(qa.question, texts, ids, "original", "retrieval:" + rs.model);
        grade(rec, rs.answer_available);
    }

    out.metrics.qa_id = qa.qa_id;
    out.metrics.generator = generator_model;
    out.metrics.domain = qa.domain;
    out.metrics.multi_hop = patterns::is_multi_hop(qa.kind);
    out.metrics.closed_book_correct = cb_correct;
    out.metrics.overall = overall_robustness(out.verdicts, opts.fold_retrieval_into_overall);
    out.metrics.query = query_robustness(out.verdicts, opts.include_original_in_query);
    out.metrics.document = document_robustness(out.verdicts);
    out.metrics.retrieval = retrieval_robustness(out.verdicts);
    return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct ReportCell {
    std::string generator;
    std::string domain;
    std::string hop; // "single" or "multi"
    size_t count = 0;
    double overall = 0, query = 0, document = 0, retrieval = 0;
};

struct RobustnessReport {
    std::vector<ReportCell> cells;
    // per-generator grand means, weighted by qa counts
    std::map<std::string, ReportCell> by_generator;
    // per-perturbation mean f, per generator
    std::map<std::string, std::map<std::string, double>> query_breakdown; // gen -> kind -> mean f
    std::map<std::string, std::map<std::string, double>> doc_breakdown;   // gen -> kind -> mean f

    json to_json() const {
        json jc = json::array();
        for (const auto& c : cells) {
            jc.push_back(json{{"generator", c.generator},
                              {"domain", c.domain},
                              {"hop", c.hop},
                              {"count", c.count},
                              {"overall", c.overall},
                              {"query", c.query},
                              {"document", c.document},
                              {"retrieval", c.retrieval}});
        }
        json jg = json::object();
        for (const auto& [gen, c] : by_generator) {
            jg[gen] = json{{"count", c.count},
                           {"overall", c.overall},
                           {"query", c.query},
                           {"document", c.document},
                           {"retrieval", c.retrieval}};
        }
        return json{{"cells", jc},
                    {"by_generator", jg},
                    {"query_breakdown", query_breakdown},
                    {"doc_breakdown", doc_breakdown}};
    }
};

/// Unweighted mean of per-question scores within each (generator, domain,
/// single/multi) cell; per-generator grand means weighted by question count.
inline RobustnessReport aggregate_report(const std::vector<QaMetrics>& metrics,
                                         const std::vector<JudgeVerdict>& verdicts) {
    RobustnessReport rep;

    std::map<std::string, std::vector<const QaMetrics*>> cells;
    for (const auto& m : metrics) {
        cells[m.generator + "\x1f" + rare::to_string(m.domain) + "\x1f" + (m.multi_hop ? "multi" : "single")]
            .push_back(&m);
    }
    for (const auto& [key, rows] : cells) {
        auto p1 = key.find('\x1f');
        auto p2 = key.find('\x1f', p1 + 1);
        ReportCell c;
        c.generator = key.substr(0, p1);
        c.domain = key.substr(p1 + 1, p2 - p1 - 1);
        c.hop = key.substr(p2 + 1);
        c.count = rows.size();
        for (const auto* m : rows) {
            c.overall += m->overall;
            c.query += m->query;
            c.document += m->document;
            c.retrieval += m->retrieval;
        }
        c.overall /= rows.size();
        c.query /= rows.size();
        c.document /= rows.size();
        c.retrieval /= rows.size();
        rep.cells.push_back(std::move(c));
    }

    std::map<std::string, std::vector<const QaMetrics*>> per_gen;
    for (const auto& m : metrics) per_gen[m.generator].push_back(&m);
    for (const auto& [gen, rows] : per_gen) {
        ReportCell c;
        c.generator = gen;
        c.count = rows.size();
        for (const auto* m : rows) {
            c.overall += m->overall;
            c.query += m->query;
            c.document += m->document;
            c.retrieval += m->retrieval;
        }
        c.overall /= rows.size();
        c.query /= rows.size();
        c.document /= rows.size();
        c.retrieval /= rows.size();
        rep.by_generator[gen] = std::move(c);
    }

    // mean f per perturbation kind
    std::map<std::string, std::map<std::string, std::pair<double, size_t>>> qacc, dacc;
    for (const auto& v : verdicts) {
        if (v.doc_kind == "ground_truth") {
            auto& a = qacc[v.generator][v.query_kind];
            a.first += v.f;
            ++a.second;
        }
        if (v.query_kind == "original" && v.doc_kind != "closed_book") {
            auto& a = dacc[v.generator][v.doc_kind];
            a.first += v.f;
            ++a.second;
        }
    }
    for (const auto& [gen, kinds] : qacc) {
        for (const auto& [kind, acc] : kinds) {
            rep.query_breakdown[gen][kind] = acc.first / acc.second;
        }
    }
    for (const auto& [gen, kinds] : dacc) {
        for (const auto& [kind, acc] : kinds) {
            rep.doc_breakdown[gen][kind] = acc.first / acc.second;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

inline std::string format_score(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string report_csv(const RobustnessReport& rep) {
    std::string out = "generator,domain,hop,count,overall,query,document,retrieval\n";
    for (const auto& c : rep.cells) {
        out += c.generator + "," + c.domain + "," + c.hop + "," + std::to_string(c.count) + "," +
               format_score(c.overall) + "," + format_score(c.query) + "," +
               format_score(c.document) + "," + format_score(c.retrieval) + "\n";
    }
    return out;
}

inline std::string report_markdown(const RobustnessReport& rep) {
    std::string out = "# Robustness report\n\n";
    out += "| Model | Overall | Query | Document | Retrieval |\n";
    out += "|---|---|---|---|---|\n";
    for (const auto& [gen, c] : rep.by_generator) {
        out += "| " + gen + " | " + format_score(c.overall) + " | " + format_score(c.query) +
               " | " + format_score(c.document) + " | " + format_score(c.retrieval) + " |\n";
    }
    out += "\n## Per domain and hop depth\n\n";
    out += "| Model | Domain | Hop | N | Overall | Query | Document | Retrieval |\n";
    out += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& c : rep.cells) {
        out += "| " + c.generator + " | " + c.domain + " | " + c.hop + " | " +
               std::to_string(c.count) + " | " + format_score(c.overall) + " | " +
               format_score(c.query) + " | " + format_score(c.document) + " | " +
               format_score(c.retrieval) + " |\n";
    }
    return out;
}

} // namespace rare::evalcore
