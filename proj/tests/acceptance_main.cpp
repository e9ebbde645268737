// Acceptance suite: one line per criterion, non-zero exit if any fails.
// Each criterion re-derives its expectations from independent oracles or
// hand-computed fixtures; runtime limits are enforced.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <vector>

#include "oracles.hpp"
#include "rare/rare.hpp"

using namespace rare;

namespace {

namespace fs = std::filesystem;

struct Check {
    std::vector<std::string> failures;
    size_t checks = 0;

    void expect(bool ok, const std::string& what) {
        ++checks;
        if (!ok) failures.push_back(what);
    }
};

providers::RetryPolicy quiet_retry() {
    providers::RetryPolicy r;
    r.sleeper = [](double) {};
    return r;
}

// ---------------------------------------------------------------------------
// 1. Judge truth table
// ---------------------------------------------------------------------------
void criterion_judge_table(Check& c) {
    for (bool cb : {false, true}) {
        for (bool avail : {false, true}) {
            for (int outcome : {0, 1, 2}) { // wrong, refusal, match
                bool matched = outcome == 2;
                bool refused = outcome == 1;
                int want = cb ? (matched ? 1 : 0)
                              : (avail ? (matched ? 1 : 0) : (refused ? 1 : 0));
                int strict = evalcore::judge_bits(matched, refused, avail, cb, false);
                c.expect(strict == want, "strict cell cb=" + std::to_string(cb) + " avail=" +
                                             std::to_string(avail) + " outcome=" +
                                             std::to_string(outcome));
                int lenient = evalcore::judge_bits(matched, refused, avail, cb, true);
                int want_lenient = (!cb && !avail && matched) ? 1 : want;
                c.expect(lenient == want_lenient, "lenient cell differs beyond the ?-cell");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 2. Metric oracle equivalence on 1000 random verdict grids
// ---------------------------------------------------------------------------
void criterion_metric_oracles(Check& c) {
    const std::vector<std::string> qks = {"original", "char_level", "word_level", "grammar",
                                          "irrelevant_info"};
    const std::vector<std::string> dks = {"ground_truth", "answer_removed", "back_translated"};
    rng::Rng rng(160920);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<evalcore::JudgeVerdict> vs;
        std::vector<std::vector<int>> grid;
        for (const auto& q : qks) {
            std::vector<int> row;
            for (const auto& d : dks) {
                int f = rng.chance(0.5) ? 1 : 0;
                row.push_back(f);
                evalcore::JudgeVerdict v;
                v.query_kind = q;
                v.doc_kind = d;
                v.f = f;
                vs.push_back(v);
            }
            grid.push_back(row);
        }
        std::vector<int> retr;
        for (int m = 0; m < 3; ++m) {
            int f = rng.chance(0.5) ? 1 : 0;
            retr.push_back(f);
            evalcore::JudgeVerdict v;
            v.query_kind = "original";
            v.doc_kind = "retrieval:m" + std::to_string(m);
            v.f = f;
            vs.push_back(v);
        }

        std::vector<int> qr, dr;
        for (const auto& v : vs) {
            if (v.doc_kind == "ground_truth" && v.query_kind != "original") qr.push_back(v.f);
            if (v.query_kind == "original" &&
                (v.doc_kind == "answer_removed" || v.doc_kind == "back_translated")) {
                dr.push_back(v.f);
            }
        }
        c.expect(std::abs(evalcore::overall_robustness(vs) - oracles::grid_mean(grid)) <= 1e-12,
                 "overall vs oracle");
        c.expect(std::abs(evalcore::query_robustness(vs) - oracles::flat_mean(qr)) <= 1e-12,
                 "query vs oracle");
        c.expect(std::abs(evalcore::document_robustness(vs) - oracles::flat_mean(dr)) <= 1e-12,
                 "document vs oracle");
        c.expect(std::abs(evalcore::retrieval_robustness(vs) - oracles::flat_mean(retr)) <= 1e-12,
                 "retrieval vs oracle");
    }
}

// ---------------------------------------------------------------------------
// 3. Degree rules and chain enumeration on 100 random graphs
// ---------------------------------------------------------------------------
void criterion_degree_rules(Check& c) {
    rng::Rng rng(31415);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<kg::Triplet> ts;
        size_t n_nodes = 3 + rng.below(10);
        size_t n_edges = 1 + rng.below(50);
        for (size_t i = 0; i < n_edges; ++i) {
            size_t a = rng.below(n_nodes), b = rng.below(n_nodes);
            if (a == b) continue;
            ts.push_back(kg::Triplet{"n" + std::to_string(a), "r" + std::to_string(rng.below(6)),
                                     "n" + std::to_string(b), "c" + std::to_string(rng.below(5)),
                                     "s", "d"});
        }
        auto g = kg::build_graph(ts);
        std::vector<oracles::Edge> edges;
        for (const auto& e : g.edges) {
            edges.push_back({kg::entity_key(e.entity_1), kg::entity_key(e.entity_2),
                             e.answer_chunk_id});
        }

        auto single = patterns::find_single_hop(g);
        auto want_single = oracles::single_hop_filter(edges);
        bool same = single.size() == want_single.size();
        for (size_t i = 0; same && i < single.size(); ++i) {
            same = single[i].edge_indices[0] == want_single[i];
        }
        c.expect(same, "single-hop set equals degree-filter oracle");

        patterns::PatternOptions opts;
        opts.edge_usage_cap = 0; // this criterion checks the full enumeration
        auto chains = patterns::find_chained(g, opts);
        auto want_chains = oracles::all_chains(edges, 3);
        std::set<std::vector<size_t>> got_set, want_set;
        for (const auto& p : chains) got_set.insert(p.edge_indices);
        for (const auto& p : want_chains) want_set.insert(p);
        c.expect(got_set == want_set, "chain set equals exhaustive path enumeration");

        size_t same_chunk = 0;
        for (const auto& kind :
             {chains, patterns::find_star(g, opts), patterns::find_inverted_star(g, opts)}) {
            for (const auto& p : kind) {
                std::set<std::string> chunks(p.chunk_ids.begin(), p.chunk_ids.end());
                if (chunks.size() < 2) ++same_chunk;
            }
        }
        c.expect(same_chunk == 0, "no same-chunk multi-hop instances");
    }
}

// ---------------------------------------------------------------------------
// 4. Chunker invariants on a mixed fixture corpus
// ---------------------------------------------------------------------------
void criterion_chunker(Check& c) {
    auto words = [](size_t n, const std::string& stem) {
        std::string out;
        for (size_t i = 0; i < n; ++i) {
            if (i) out += " ";
            out += stem + std::to_string(i);
        }
        return out;
    };

    rng::Rng rng(11);
    for (int d = 0; d < 4; ++d) {
        SourceDocument doc;
        doc.doc_id = "fixture" + std::to_string(d);
        doc.domain = Domain::finance;
        size_t blocks = 8 + rng.below(8);
        for (size_t b = 0; b < blocks; ++b) {
            if (b) doc.body += "\n\n";
            double roll = rng.unit();
            std::string tag = "d" + std::to_string(d) + "b" + std::to_string(b);
            if (roll < 0.2) {
                doc.body += "Holdings table " + std::to_string(b) + ":\n| Asset" + tag +
                            " | Qty |\n|---|---|\n";
                size_t rows = 2 + rng.below(5);
                for (size_t r = 0; r < rows; ++r) {
                    doc.body += "| asset" + tag + "_" + std::to_string(r) + " | " +
                                std::to_string(r * 10) + " |\n";
                }
            } else if (roll < 0.3) {
                // oversized single table (> 600 tokens) must become its own chunk
                doc.body += "Giant ledger:\n| K" + tag + " | V |\n|---|---|\n";
                for (size_t r = 0; r < 130; ++r) {
                    doc.body += "| row" + tag + "_" + std::to_string(r) + " | " + words(5, "g") +
                                " |\n";
                }
            } else {
                doc.body += words(40 + rng.below(500), "p" + std::to_string(b) + "x");
            }
        }

        auto units = ingest::segment_units(doc);
        auto chunks = ingest::chunk_document(doc, 600);

        c.expect(ingest::round_trips(doc, chunks), "round-trip reconstruction");

        // no unit (paragraph or table) is split across chunks
        for (const auto& u : units) {
            size_t holders = 0;
            for (const auto& ch : chunks) {
                if (text::contains_ws_normalized(ch.text, u.text)) ++holders;
            }
            c.expect(holders >= 1, "unit contained wholly in a chunk");
        }

        for (const auto& ch : chunks) {
            if (ch.token_count > 600) {
                bool singleton = false;
                for (const auto& u : units) {
                    if (text::collapse_ws(u.text) == text::collapse_ws(ch.text)) singleton = true;
                }
                c.expect(singleton, "over-budget chunk is a lone oversized unit");
            }
        }

        // every table's rows stay together
        for (const auto& u : units) {
            if (!u.is_table) continue;
            std::string first_row, last_row;
            for (const auto& line : text::split_lines(u.text)) {
                if (ingest::is_table_row(line)) {
                    if (first_row.empty()) first_row = line;
                    last_row = line;
                }
            }
            for (const auto& ch : chunks) {
                bool has_first = ch.text.find(first_row) != std::string::npos;
                bool has_last = ch.text.find(last_row) != std::string::npos;
                c.expect(has_first == has_last, "table rows never split across chunks");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 5. Two-stage matcher fixtures
// ---------------------------------------------------------------------------
void criterion_matcher(Check& c) {
    auto m1 = evalcore::match_answer("$94.8 billion", "94.8 billion", nullptr);
    c.expect(m1.matched && m1.stage == evalcore::MatchStage::exact_substring,
             "'$94.8 billion' vs '94.8 billion' at stage 1");
    auto m2 = evalcore::match_answer("Free public transport for all", "free public transport",
                                     nullptr);
    c.expect(m2.matched && m2.stage == evalcore::MatchStage::exact_substring,
             "'Free public transport for all' vs 'free public transport' at stage 1");

    auto be = std::make_shared<mock::ScriptedEmbedBackend>();
    be->set("ref", {1.0, 0.0});
    be->set("close", {0.91, std::sqrt(1 - 0.91 * 0.91)});
    be->set("far", {0.89, std::sqrt(1 - 0.89 * 0.89)});
    providers::EmbedClient embedder(be, nullptr, quiet_retry());
    evalcore::MatcherConfig cfg{0.9, "m"};

    auto hit = evalcore::match_answer("close", "ref", &embedder, cfg);
    c.expect(hit.matched && hit.stage == evalcore::MatchStage::embedding, "cosine 0.91 matches");
    auto miss = evalcore::match_answer("far", "ref", &embedder, cfg);
    c.expect(!miss.matched, "cosine 0.89 does not match (threshold 0.9 strict)");
}

// ---------------------------------------------------------------------------
// 6. Perturbation guards over 200+ generated variants
// ---------------------------------------------------------------------------
void criterion_perturbation_guards(Check& c) {
    providers::ChatClient chat(std::make_shared<mock::RuleMockChat>(), nullptr, quiet_retry());
    providers::EmbedClient embedder(std::make_shared<mock::BowEmbedBackend>(), nullptr,
                                    quiet_retry());
    perturb::SynonymLexicon lexicon =
        perturb::SynonymLexicon::load(fs::path(RARE_SOURCE_DIR) / "data" / "synonyms.tsv");
    perturb::LlmGuardConfig guard{0.85, "guard"};
    perturb::BacktranslateConfig bt;
    bt.embed_model = "guard";

    const std::vector<std::string> sectors = {"renewable storage", "freight corridors",
                                              "harbor logistics", "municipal clinics",
                                              "vocational academies"};
    size_t variants = 0;
    for (int i = 0; i < 40; ++i) {
        std::string entity = "Consortium" + std::to_string(i);
        std::string answer = sectors[i % sectors.size()];
        std::string question = "What does " + entity + " currently develops according to the " +
                               std::to_string(2020 + (i % 5)) + " disclosure report?";
        std::string year = std::to_string(2020 + (i % 5));

        qagen::QAPair qa;
        qa.qa_id = "qa_fix_" + std::to_string(i);
        qa.kind = patterns::PatternKind::single_hop;
        qa.question = question;
        qa.answer = answer;
        qa.gt_chunk_ids = {"finance_fix_chunk_" + std::to_string(i)};
        qa.triplets = {kg::Triplet{entity, "develops", answer, qa.gt_chunk_ids[0],
                                   entity + " develops " + answer + ".", "fix"}};
        Chunk chunk;
        chunk.chunk_id = qa.gt_chunk_ids[0];
        chunk.doc_id = "fix";
        chunk.text = "The annual disclosure opens with broadly steady results. " + entity +
                     " develops " + answer + ". Management notably expects the " + year +
                     " momentum to continue while conditions overall stay benign.";
        chunk.token_count = whitespace_token_count(chunk.text);

        uint64_t seed = 1000 + i;

        auto cv = perturb::perturb_char(qa.qa_id, question, answer, seed);
        c.expect(cv.has_value(), "char variant produced");
        if (cv) {
            ++variants;
            c.expect(cv->text.find(year) != std::string::npos, "char variant preserves the year");
            auto rerun = perturb::perturb_char(qa.qa_id, question, answer, seed);
            c.expect(rerun && rerun->text == cv->text, "char variant byte-identical on rerun");
        }

        auto wv = perturb::perturb_word(qa.qa_id, question, answer, seed, lexicon);
        c.expect(wv.has_value(), "word variant produced");
        if (wv) {
            ++variants;
            c.expect(wv->text.find(year) != std::string::npos, "word variant preserves the year");
            auto rerun = perturb::perturb_word(qa.qa_id, question, answer, seed, lexicon);
            c.expect(rerun && rerun->text == wv->text, "word variant byte-identical on rerun");
        }

        for (auto kind : {perturb::QueryKind::grammar, perturb::QueryKind::irrelevant_info}) {
            auto lv = perturb::perturb_llm(qa.qa_id, question, answer, kind, chat, "m", embedder,
                                           guard);
            c.expect(lv.has_value(), "llm variant produced");
            if (lv) {
                ++variants;
                c.expect(embedder.similarity("guard", question, lv->text) >= guard.tau_query,
                         "llm variant passes the meaning guard on recheck");
                c.expect(lv->text.find(year) != std::string::npos,
                         "llm variant preserves the year");
            }
        }

        auto rv = perturb::perturb_doc_remove_answer(qa, {chunk});
        c.expect(rv.has_value(), "answer_removed variant produced");
        if (rv) {
            ++variants;
            for (const auto& [_, txt] : rv->chunks) {
                c.expect(!text::normalized_contains(txt, answer),
                         "answer_removed fails answer containment");
            }
        }

        auto bv = perturb::perturb_doc_backtranslate(qa, {chunk}, chat, "m", embedder, bt);
        c.expect(bv.has_value(), "back_translated variant produced");
        if (bv) {
            ++variants;
            for (const auto& [_, txt] : bv->chunks) {
                bool recoverable = text::normalized_contains(txt, answer);
                if (!recoverable) {
                    double best = -1;
                    auto src = embedder.embed_single("guard", qa.triplets[0].source_sentence);
                    for (const auto& s : text::split_sentences(txt)) {
                        auto cand = embedder.embed_single("guard", s);
                        best = std::max(best, providers::cosine(src.values, cand.values));
                    }
                    recoverable = best >= bt.tau_doc;
                }
                c.expect(recoverable, "back_translated passes the recoverability guard");
            }
        }
    }
    c.expect(variants >= 200, "at least 200 variants exercised (got " + std::to_string(variants) + ")");
}

// ---------------------------------------------------------------------------
// 7 & 8. End-to-end mock run on the bundled toy corpus
// ---------------------------------------------------------------------------
struct E2EResult {
    std::unique_ptr<pipeline::Pipeline> pipeline;
    fs::path out_dir;
};

E2EResult run_toy_pipeline(Check& c) {
    E2EResult r;
    r.out_dir = fs::temp_directory_path() / ("rare_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(r.out_dir);

    auto cfg = config::load_config(fs::path(RARE_SOURCE_DIR) / "data" / "configs" / "toy.toml");
    cfg.corpus_dir = fs::path(RARE_SOURCE_DIR) / "data" / "toy_corpus";
    cfg.lexicon_path = fs::path(RARE_SOURCE_DIR) / "data" / "synonyms.tsv";
    cfg.output_dir = r.out_dir;
    cfg.cache_dir.clear();
    cfg.mock = true;
    cfg.validate();

    uint64_t net_before = providers::network_calls().load();
    r.pipeline = std::make_unique<pipeline::Pipeline>(cfg);
    r.pipeline->run_all();
    c.expect(providers::network_calls().load() == net_before, "zero network calls");
    return r;
}

void criterion_e2e(Check& c, E2EResult& r) {
    auto& p = *r.pipeline;
    auto qas = qagen::read_qa(p.qa_accepted_path());

    std::map<std::string, size_t> by_kind;
    for (const auto& qa : qas) ++by_kind[patterns::to_string(qa.kind)];
    for (const char* kind : {"single_hop", "chained", "star", "inverted_star"}) {
        c.expect(by_kind[kind] >= 1, std::string("accepted pair of kind ") + kind);
    }

    auto queries = perturb::read_query_variants(p.query_variants_path());
    auto docs = perturb::read_doc_variants(p.doc_variants_path());
    auto sets = retrieval::read_retrieval_sets(p.retrieval_sets_path());
    std::map<std::string, std::set<std::string>> q_kinds, d_kinds;
    std::map<std::string, size_t> r_counts;
    for (const auto& v : queries) q_kinds[v.qa_id].insert(perturb::to_string(v.kind));
    for (const auto& v : docs) d_kinds[v.qa_id].insert(perturb::to_string(v.kind));
    for (const auto& s : sets) ++r_counts[s.qa_id];
    for (const auto& qa : qas) {
        c.expect(q_kinds[qa.qa_id].size() == 5, "5 query kinds for " + qa.qa_id);
        c.expect(d_kinds[qa.qa_id].size() == 3, "3 doc kinds for " + qa.qa_id);
        c.expect(r_counts[qa.qa_id] == 3, "3 retrieval sets for " + qa.qa_id);
    }

    std::map<std::string, std::vector<evalcore::JudgeVerdict>> refuse_by_qa;
    for (const auto& row : jsonl::read_all(p.verdicts_path())) {
        auto v = evalcore::JudgeVerdict::from_json(row);
        if (v.generator == "mock-refuse") refuse_by_qa[v.qa_id].push_back(v);
    }

    for (const auto& m : p.metrics_from_verdicts(false)) {
        if (m.generator == "mock-echo") {
            c.expect(m.overall == 1.0 && m.query == 1.0 && m.document == 1.0 && m.retrieval == 1.0,
                     "echo generator scores 1.0 on all metrics for " + m.qa_id);
        } else if (m.generator == "mock-refuse") {
            const auto& vs = refuse_by_qa[m.qa_id];
            auto fraction = [&](auto pred) {
                size_t n = 0, hits = 0;
                for (const auto& v : vs) {
                    if (!pred(v)) continue;
                    ++n;
                    if (!v.answer_available && !v.closed_book_correct) ++hits;
                }
                return n == 0 ? -1.0 : static_cast<double>(hits) / n;
            };
            double want_overall = fraction([](const auto& v) {
                return !evalcore::is_retrieval_doc_kind(v.doc_kind);
            });
            double want_query = fraction([](const auto& v) {
                return v.doc_kind == "ground_truth" && v.query_kind != "original";
            });
            double want_doc = fraction([](const auto& v) {
                return v.query_kind == "original" &&
                       (v.doc_kind == "answer_removed" || v.doc_kind == "back_translated");
            });
            double want_retr = fraction([](const auto& v) {
                return evalcore::is_retrieval_doc_kind(v.doc_kind);
            });
            c.expect(std::abs(m.overall - want_overall) < 1e-12 &&
                         std::abs(m.query - want_query) < 1e-12 &&
                         std::abs(m.document - want_doc) < 1e-12 &&
                         std::abs(m.retrieval - want_retr) < 1e-12,
                     "refusal generator scores the unanswerable fraction for " + m.qa_id);
        }
    }

    c.expect(fs::exists(p.report_json_path()), "report.json written");
}

void criterion_degraded_direction(Check& c, E2EResult& r) {
    double query_sum = 0, doc_sum = 0;
    size_t n = 0;
    for (const auto& m : r.pipeline->metrics_from_verdicts(false)) {
        if (m.generator != "mock-degraded") continue;
        query_sum += m.query;
        doc_sum += m.document;
        ++n;
    }
    c.expect(n > 0, "degraded generator evaluated");
    if (n > 0) {
        double q = query_sum / n, d = doc_sum / n;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "document %.3f < query %.3f", d, q);
        c.expect(d < q, std::string("strict inequality failed: ") + buf);
    }
}

} // namespace

int main() {
    struct Criterion {
        int id;
        std::string name;
        double limit_s;
        std::function<void(Check&)> run;
    };

    E2EResult e2e;
    std::vector<Criterion> criteria = {
        {1, "judge truth table matches the decision matrix", 1.0, criterion_judge_table},
        {2, "metric implementations equal brute-force summation (1000 grids)", 5.0,
         criterion_metric_oracles},
        {3, "degree/chain traversal equals oracles on 100 random graphs", 10.0,
         criterion_degree_rules},
        {4, "chunker invariants on a mixed paragraph/table fixture", 1.0, criterion_chunker},
        {5, "two-stage matcher fixtures (substring + 0.9 threshold)", 1.0, criterion_matcher},
        {6, "perturbation guards over 200+ variants", 30.0, criterion_perturbation_guards},
        {7, "end-to-end mock run: echo=1.0, refusal=unanswerable fraction", 60.0,
         [&](Check& c) {
             e2e = run_toy_pipeline(c);
             criterion_e2e(c, e2e);
         }},
        {8, "degraded generator: document robustness < query robustness", 60.0,
         [&](Check& c) { criterion_degraded_direction(c, e2e); }},
    };

    int failed = 0;
    for (auto& cr : criteria) {
        Check check;
        auto t0 = std::chrono::steady_clock::now();
        try {
            cr.run(check);
        } catch (const std::exception& e) {
            check.failures.push_back(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > cr.limit_s) {
            check.failures.push_back("runtime " + std::to_string(secs) + "s exceeds " +
                                     std::to_string(cr.limit_s) + "s");
        }
        bool ok = check.failures.empty();
        failed += ok ? 0 : 1;
        std::printf("[%s] criterion %d: %s (%zu checks, %.2fs, limit %.0fs)\n",
                    ok ? "PASS" : "FAIL", cr.id, cr.name.c_str(), check.checks, secs, cr.limit_s);
        for (size_t i = 0; i < check.failures.size() && i < 5; ++i) {
            std::printf("       - %s\n", check.failures[i].c_str());
        }
        if (check.failures.size() > 5) {
            std::printf("       - ... and %zu more\n", check.failures.size() - 5);
        }
    }

    if (e2e.pipeline) {
        std::error_code ec;
        fs::remove_all(e2e.out_dir, ec);
    }
    if (failed) {
        std::printf("%d criterion(s) failed\n", failed);
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
