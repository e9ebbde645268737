#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "rare/config.hpp"
#include "rare/evalcore.hpp"
#include "rare/http_backend.hpp"
#include "rare/ingest.hpp"
#include "rare/kgraph.hpp"
#include "rare/manifest.hpp"
#include "rare/mock.hpp"
#include "rare/parallel.hpp"
#include "rare/patterns.hpp"
#include "rare/perturb.hpp"
#include "rare/qagen.hpp"
#include "rare/retrieval.hpp"

namespace rare::pipeline {

namespace fs = std::filesystem;

class Pipeline {
public:
    explicit Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {
        config_digest_ = hash::sha256_hex(cfg_.to_json().dump());
        fs::create_directories(cfg_.output_dir);
        fs::path cache_dir = cfg_.cache_dir.empty() ? cfg_.output_dir / "cache" : cfg_.cache_dir;
        cache_ = std::make_shared<providers::DiskCache>(cache_dir);
        limiter_ = std::make_shared<providers::Semaphore>(cfg_.max_in_flight);
        manifest_ = manifest::load_manifest(manifest_path());
    }

    const config::PipelineConfig& config() const { return cfg_; }

    // ------------------------------------------------------------------
    // Artifact paths
    // ------------------------------------------------------------------
    fs::path manifest_path() const { return cfg_.output_dir / "manifest.json"; }
    fs::path chunks_path() const { return cfg_.output_dir / "chunks.jsonl"; }
    fs::path triplets_path() const { return cfg_.output_dir / "triplets.jsonl"; }
    fs::path triplets_norm_path() const { return cfg_.output_dir / "triplets.norm.jsonl"; }
    fs::path kg_path() const { return cfg_.output_dir / "kg.json"; }
    fs::path patterns_path() const { return cfg_.output_dir / "patterns.jsonl"; }
    fs::path pattern_stats_path() const { return cfg_.output_dir / "pattern_stats.json"; }
    fs::path qa_accepted_path() const { return cfg_.output_dir / "qa.accepted.jsonl"; }
    fs::path qa_rejected_path() const { return cfg_.output_dir / "qa.rejected.jsonl"; }
    fs::path split_path() const { return cfg_.output_dir / "split.json"; }
    fs::path query_variants_path() const { return cfg_.output_dir / "query_variants.jsonl"; }
    fs::path doc_variants_path() const { return cfg_.output_dir / "doc_variants.jsonl"; }
    fs::path index_path(const std::string& model) const {
        return cfg_.output_dir / ("index." + model + ".jsonl");
    }
    fs::path retrieval_sets_path() const { return cfg_.output_dir / "retrieval_sets.jsonl"; }
    fs::path generations_path() const { return cfg_.output_dir / "generations.jsonl"; }
    fs::path verdicts_path() const { return cfg_.output_dir / "verdicts.jsonl"; }
    fs::path report_json_path() const { return cfg_.output_dir / "report.json"; }
    fs::path report_csv_path() const { return cfg_.output_dir / "report.csv"; }
    fs::path report_md_path() const { return cfg_.output_dir / "report.md"; }

    // ------------------------------------------------------------------
    // Stages
    // ------------------------------------------------------------------

    void cmd_ingest(bool force = false) {
        auto inputs = corpus_files();
        if (run_stage("ingest", inputs, {chunks_path()}, force, [&] {
                auto docs = ingest::load_corpus(cfg_.corpus_dir, cfg_.default_domain);
                if (docs.empty()) throw Error("no documents in " + cfg_.corpus_dir.string());
                std::vector<Chunk> all;
                for (const auto& doc : docs) {
                    auto chunks = ingest::chunk_document(doc, cfg_.chunk_budget);
                    doc_meta_[doc.doc_id] = doc.meta;
                    doc_domain_[doc.doc_id] = doc.domain;
                    all.insert(all.end(), chunks.begin(), chunks.end());
                }
                ingest::write_chunks(chunks_path(), all);
                log::info("ingest: ", docs.size(), " documents -> ", all.size(), " chunks");
            })) {
        }
    }

    void cmd_extract_kg(bool force = false) {
        require(chunks_path(), "ingest");
        run_stage("extract_kg", {chunks_path()},
                  {triplets_path(), triplets_norm_path(), kg_path()}, force, [&] {
            auto chunks = ingest::read_chunks(chunks_path());
            auto grouped = group_by_doc(chunks);

            struct Window {
                std::vector<Chunk> chunks;
                Domain domain;
            };
            std::vector<Window> work;
            for (const auto& [doc_id, doc_chunks] : grouped) {
                Domain d = patterns::domain_from_chunk_id(doc_chunks.front().chunk_id);
                for (auto& w : kg::windows(doc_chunks, cfg_.window_n, cfg_.window_stride)) {
                    work.push_back(Window{std::move(w), d});
                }
            }

            auto chat = chat_client(extractor_backend());
            auto per_window = parallel::parallel_map(
                work,
                [&](const Window& w) {
                    return kg::extract_window(w.chunks, w.domain, *chat, cfg_.extractor.model);
                },
                cfg_.max_in_flight);

            std::vector<kg::Triplet> raw;
            for (auto& ts : per_window) raw.insert(raw.end(), ts.begin(), ts.end());
            std::vector<json> rows;
            for (const auto& t : raw) rows.push_back(t.to_json());
            jsonl::write_all(triplets_path(), rows);

            auto embedder = embed_client();
            auto [norm, clusters] =
                kg::normalize_relations(raw, *embedder, cfg_.matcher_embedding_model, cfg_.tau_rel);
            rows.clear();
            for (const auto& t : norm) rows.push_back(t.to_json());
            jsonl::write_all(triplets_norm_path(), rows);

            // per-document graphs merged into the corpus graph
            std::map<std::string, std::vector<kg::Triplet>> by_doc;
            for (const auto& t : norm) by_doc[t.doc_id].push_back(t);
            std::vector<kg::KnowledgeGraph> graphs;
            for (const auto& [_, ts] : by_doc) graphs.push_back(kg::build_graph(ts));
            auto merged = kg::merge_graphs(graphs);
            jsonl::write_json(kg_path(), kg::graph_to_json(merged, clusters));
            log::info("extract_kg: ", raw.size(), " raw triplets, ", merged.edges.size(),
                      " edges, ", clusters.size(), " relation clusters");
        });
    }

    void cmd_patterns(bool force = false) {
        require(kg_path(), "extract_kg");
        require(triplets_norm_path(), "extract_kg");
        run_stage("patterns", {kg_path(), triplets_norm_path()},
                  {patterns_path(), pattern_stats_path()}, force, [&] {
            auto graph = kg::graph_from_json(jsonl::read_json(kg_path()));
            patterns::PatternOptions opts;
            opts.max_chain_len = cfg_.max_chain_len;
            opts.edge_usage_cap = cfg_.edge_usage_cap;

            std::vector<patterns::PatternInstance> all;
            for (auto& v : {patterns::find_single_hop(graph), patterns::find_chained(graph, opts),
                            patterns::find_star(graph, opts),
                            patterns::find_inverted_star(graph, opts)}) {
                all.insert(all.end(), v.begin(), v.end());
            }

            // map graph edges to their first index in triplets.norm.jsonl
            std::vector<kg::Triplet> norm;
            for (const auto& row : jsonl::read_all(triplets_norm_path())) {
                norm.push_back(kg::Triplet::from_json(row));
            }
            std::map<std::string, size_t> first_index;
            for (size_t i = 0; i < norm.size(); ++i) {
                first_index.try_emplace(edge_key(norm[i]), i);
            }
            std::vector<json> rows;
            for (auto inst : all) {
                for (auto& idx : inst.edge_indices) {
                    idx = first_index.at(edge_key(graph.edges[idx]));
                }
                rows.push_back(inst.to_json());
            }
            jsonl::write_all(patterns_path(), rows);
            jsonl::write_json(pattern_stats_path(), json(patterns::pattern_stats(all)));
            log::info("patterns: ", all.size(), " instances");
        });
    }

    void cmd_genqa(bool force = false) {
        require(patterns_path(), "patterns");
        require(triplets_norm_path(), "extract_kg");
        require(chunks_path(), "ingest");
        run_stage("genqa", {patterns_path(), triplets_norm_path(), chunks_path()},
                  {qa_accepted_path(), qa_rejected_path(), split_path()}, force, [&] {
            auto chunks = ingest::read_chunks(chunks_path());
            auto chunk_map = chunk_lookup(chunks);
            std::vector<kg::Triplet> norm;
            for (const auto& row : jsonl::read_all(triplets_norm_path())) {
                norm.push_back(kg::Triplet::from_json(row));
            }
            std::vector<patterns::PatternInstance> instances;
            for (const auto& row : jsonl::read_all(patterns_path())) {
                instances.push_back(patterns::PatternInstance::from_json(row));
            }
            load_doc_meta();

            auto writer = chat_client(extractor_backend());
            auto judge = chat_client(qa_judge_backend());

            struct Outcome {
                std::optional<qagen::QAPair> pair;
                bool accepted = false;
                std::optional<qagen::QualityScores> scores;
            };
            auto outcomes = parallel::parallel_map(
                instances,
                [&](const patterns::PatternInstance& inst) {
                    Outcome o;
                    std::vector<kg::Triplet> ts;
                    for (size_t idx : inst.edge_indices) ts.push_back(norm.at(idx));
                    std::vector<Chunk> gt;
                    for (const auto& cid : inst.chunk_ids) gt.push_back(*chunk_map.at(cid));
                    const auto& meta = doc_meta_[gt.front().doc_id];
                    Domain domain = patterns::domain_from_chunk_id(gt.front().chunk_id);

                    if (inst.kind == patterns::PatternKind::single_hop) {
                        o.pair = qagen::generate_single_hop(inst, ts.front(), gt.front(), meta,
                                                            domain, *writer, cfg_.extractor.model);
                    } else {
                        o.pair = qagen::generate_multi_hop(inst, ts, gt, meta, domain, *writer,
                                                           cfg_.extractor.model);
                    }
                    if (o.pair) {
                        auto [accepted, scores] =
                            qagen::quality_gate(*o.pair, gt, *judge, cfg_.qa_judge.model);
                        o.accepted = accepted;
                        o.scores = scores;
                    }
                    return o;
                },
                cfg_.max_in_flight);

            std::vector<qagen::QAPair> accepted;
            std::vector<json> rejected;
            std::set<std::string> seen_ids;
            size_t yielded = 0;
            for (const auto& o : outcomes) {
                if (!o.pair) continue;
                ++yielded;
                if (!seen_ids.insert(o.pair->qa_id).second) continue; // duplicate question
                json scores_json = o.scores ? o.scores->to_json() : json(nullptr);
                if (o.accepted) {
                    accepted.push_back(*o.pair);
                } else {
                    json row = o.pair->to_json();
                    row["scores"] = scores_json;
                    rejected.push_back(row);
                }
            }
            qagen::write_qa(qa_accepted_path(), accepted);
            jsonl::write_all(qa_rejected_path(), rejected);
            auto split = qagen::split_benchmark(accepted, cfg_.test_quota, cfg_.split_seed);
            jsonl::write_json(split_path(), split.to_json());
            log::info("genqa: ", instances.size(), " instances -> ", yielded, " pairs, ",
                      accepted.size(), " accepted");
        });
    }

    void cmd_perturb(bool force = false) {
        require(qa_accepted_path(), "genqa");
        require(chunks_path(), "ingest");
        run_stage("perturb", {qa_accepted_path(), chunks_path()},
                  {query_variants_path(), doc_variants_path()}, force, [&] {
            auto qas = qagen::read_qa(qa_accepted_path());
            auto chunks = ingest::read_chunks(chunks_path());
            auto chunk_map = chunk_lookup(chunks);

            perturb::SynonymLexicon lexicon;
            if (!cfg_.lexicon_path.empty() && fs::exists(cfg_.lexicon_path)) {
                lexicon = perturb::SynonymLexicon::load(cfg_.lexicon_path);
            } else if (!cfg_.lexicon_path.empty()) {
                log::warn("lexicon not found at ", cfg_.lexicon_path.string(),
                          "; word perturbation falls back to typos");
            }

            auto chat = chat_client(perturber_backend());
            auto embedder = embed_client();
            perturb::LlmGuardConfig guard{cfg_.tau_q, cfg_.matcher_embedding_model};
            perturb::BacktranslateConfig bt;
            bt.pivot_language = cfg_.pivot_language;
            bt.tau_doc = cfg_.tau_d;
            bt.embed_model = cfg_.matcher_embedding_model;

            struct VariantRows {
                std::vector<perturb::QueryVariant> queries;
                std::vector<perturb::DocVariant> docs;
            };
            auto all = parallel::parallel_map(
                qas,
                [&](const qagen::QAPair& qa) {
                    VariantRows rows;
                    rows.queries.push_back(
                        perturb::QueryVariant{qa.qa_id, perturb::QueryKind::original, qa.question, 0});
                    if (auto v = perturb::perturb_char(qa.qa_id, qa.question, qa.answer,
                                                       seed_for(qa.qa_id, "char"))) {
                        rows.queries.push_back(*v);
                    }
                    if (auto v = perturb::perturb_word(qa.qa_id, qa.question, qa.answer,
                                                       seed_for(qa.qa_id, "word"), lexicon)) {
                        rows.queries.push_back(*v);
                    }
                    for (auto kind : {perturb::QueryKind::grammar, perturb::QueryKind::irrelevant_info}) {
                        if (auto v = perturb::perturb_llm(qa.qa_id, qa.question, qa.answer, kind,
                                                          *chat, cfg_.perturber.model, *embedder,
                                                          guard)) {
                            rows.queries.push_back(*v);
                        }
                    }

                    std::vector<Chunk> gt;
                    for (const auto& cid : qa.gt_chunk_ids) gt.push_back(*chunk_map.at(cid));
                    perturb::DocVariant gt_variant;
                    gt_variant.qa_id = qa.qa_id;
                    gt_variant.kind = perturb::DocKind::ground_truth;
                    gt_variant.answer_available = true;
                    for (const auto& c : gt) gt_variant.chunks.emplace_back(c.chunk_id, c.text);
                    rows.docs.push_back(std::move(gt_variant));

                    if (auto v = perturb::perturb_doc_remove_answer(qa, gt)) rows.docs.push_back(*v);
                    if (auto v = perturb::perturb_doc_backtranslate(qa, gt, *chat,
                                                                   cfg_.perturber.model, *embedder,
                                                                   bt)) {
                        rows.docs.push_back(*v);
                    }
                    return rows;
                },
                cfg_.max_in_flight);

            std::vector<perturb::QueryVariant> queries;
            std::vector<perturb::DocVariant> docs;
            for (auto& rows : all) {
                queries.insert(queries.end(), rows.queries.begin(), rows.queries.end());
                docs.insert(docs.end(), rows.docs.begin(), rows.docs.end());
            }
            perturb::write_query_variants(query_variants_path(), queries);
            perturb::write_doc_variants(doc_variants_path(), docs);
            log::info("perturb: ", queries.size(), " query variants, ", docs.size(),
                      " doc variants over ", qas.size(), " questions");
        });
    }

    void cmd_index(bool force = false) {
        require(chunks_path(), "ingest");
        require(qa_accepted_path(), "genqa");
        std::vector<fs::path> outputs{retrieval_sets_path()};
        for (const auto& m : cfg_.embedding_models) outputs.push_back(index_path(m));
        run_stage("index", {chunks_path(), qa_accepted_path()}, outputs, force, [&] {
            auto chunks = ingest::read_chunks(chunks_path());
            auto chunk_map = chunk_lookup(chunks);
            auto qas = qagen::read_qa(qa_accepted_path());
            auto embedder = embed_client();

            std::vector<retrieval::RetrievalSet> sets;
            for (const auto& model : cfg_.embedding_models) {
                auto index = retrieval::build_index(model, chunks, *embedder);
                retrieval::save_index(index_path(model), index);
                for (const auto& qa : qas) {
                    auto rs = retrieval::retrieve(index, qa.question, *embedder, cfg_.retrieval_k);
                    rs.qa_id = qa.qa_id;
                    rs.answer_available = retrieval::decide_availability(rs, qa, chunk_map);
                    sets.push_back(std::move(rs));
                }
            }
            retrieval::write_retrieval_sets(retrieval_sets_path(), sets);
            log::info("index: ", cfg_.embedding_models.size(), " models x ", qas.size(),
                      " questions");
        });
    }

    void cmd_evaluate(bool force = false) {
        require(qa_accepted_path(), "genqa");
        require(query_variants_path(), "perturb");
        require(doc_variants_path(), "perturb");
        require(retrieval_sets_path(), "index");
        require(chunks_path(), "ingest");
        run_stage("evaluate",
                  {qa_accepted_path(), query_variants_path(), doc_variants_path(),
                   retrieval_sets_path(), chunks_path()},
                  {generations_path(), verdicts_path()}, force, [&] {
            auto qas = qagen::read_qa(qa_accepted_path());
            auto chunks = ingest::read_chunks(chunks_path());
            auto chunk_map = chunk_lookup(chunks);
            auto queries = perturb::read_query_variants(query_variants_path());
            auto docs = perturb::read_doc_variants(doc_variants_path());
            auto sets = retrieval::read_retrieval_sets(retrieval_sets_path());

            std::map<std::string, std::vector<perturb::QueryVariant>> q_by_qa;
            for (const auto& v : queries) q_by_qa[v.qa_id].push_back(v);
            std::map<std::string, std::vector<perturb::DocVariant>> d_by_qa;
            for (const auto& v : docs) d_by_qa[v.qa_id].push_back(v);
            std::map<std::string, std::vector<retrieval::RetrievalSet>> r_by_qa;
            for (const auto& s : sets) r_by_qa[s.qa_id].push_back(s);

            evalcore::EvalOptions opts;
            opts.lenient = cfg_.judge_mode == "lenient";
            opts.matcher.threshold = cfg_.match_threshold;
            opts.matcher.embed_model = cfg_.matcher_embedding_model;
            opts.refusals = cfg_.refusals;
            auto embedder = embed_client();

            std::vector<json> gen_rows, verdict_rows;
            for (const auto& model : cfg_.generators) {
                auto gen_chat = chat_client(generator_backend(model));
                auto results = parallel::parallel_map(
                    qas,
                    [&](const qagen::QAPair& qa) {
                        evalcore::QaGridInputs in;
                        in.qa = qa;
                        in.query_variants = q_by_qa[qa.qa_id];
                        in.doc_variants = d_by_qa[qa.qa_id];
                        in.retrieval_sets = r_by_qa[qa.qa_id];
                        in.chunks_by_id = &chunk_map;
                        return evalcore::evaluate_qa_grid(in, *gen_chat, model, embedder.get(), opts);
                    },
                    cfg_.max_in_flight);
                for (const auto& r : results) {
                    for (const auto& g : r.generations) gen_rows.push_back(g.to_json());
                    for (const auto& v : r.verdicts) verdict_rows.push_back(v.to_json());
                }
            }
            jsonl::write_all(generations_path(), gen_rows);
            jsonl::write_all(verdicts_path(), verdict_rows);
            log::info("evaluate: ", gen_rows.size(), " generations, ", verdict_rows.size(),
                      " verdicts");
        });
    }

    std::string cmd_report(bool force = false) {
        require(verdicts_path(), "evaluate");
        require(qa_accepted_path(), "genqa");
        run_stage("report", {verdicts_path(), qa_accepted_path()},
                  {report_json_path(), report_csv_path(), report_md_path()}, force, [&] {
            json out;
            std::string md;
            if (cfg_.judge_mode == "both") {
                auto strict = build_report(false);
                auto lenient = build_report(true);
                out = json{{"strict", strict.to_json()}, {"lenient", lenient.to_json()}};
                md = "# Strict judging\n\n" + evalcore::report_markdown(strict) +
                     "\n# Lenient judging\n\n" + evalcore::report_markdown(lenient);
                jsonl::write_text_atomic(report_csv_path(), evalcore::report_csv(strict));
            } else {
                auto rep = build_report(cfg_.judge_mode == "lenient");
                out = rep.to_json();
                md = evalcore::report_markdown(rep);
                jsonl::write_text_atomic(report_csv_path(), evalcore::report_csv(rep));
            }
            jsonl::write_json(report_json_path(), out);
            jsonl::write_text_atomic(report_md_path(), md);
        });
        return jsonl::read_text(report_md_path());
    }

    void run_all(bool force = false) {
        cmd_ingest(force);
        cmd_extract_kg(force);
        cmd_patterns(force);
        cmd_genqa(force);
        cmd_perturb(force);
        cmd_index(force);
        cmd_evaluate(force);
        cmd_report(force);
    }

    /// Per-question metrics recomputed from the verdict grid (used by the
    /// report stage and tests).
    std::vector<evalcore::QaMetrics> metrics_from_verdicts(bool lenient) {
        auto qas = qagen::read_qa(qa_accepted_path());
        std::map<std::string, const qagen::QAPair*> qa_by_id;
        for (const auto& q : qas) qa_by_id[q.qa_id] = &q;

        std::map<std::string, std::vector<evalcore::JudgeVerdict>> grouped; // generator \x1f qa
        std::vector<std::string> order;
        for (const auto& row : jsonl::read_all(verdicts_path())) {
            auto v = evalcore::JudgeVerdict::from_json(row);
            v.f = lenient ? v.f_lenient : v.f_strict;
            std::string key = v.generator + "\x1f" + v.qa_id;
            if (grouped.find(key) == grouped.end()) order.push_back(key);
            grouped[key].push_back(std::move(v));
        }

        std::vector<evalcore::QaMetrics> out;
        for (const auto& key : order) {
            const auto& vs = grouped[key];
            auto sep = key.find('\x1f');
            evalcore::QaMetrics m;
            m.generator = key.substr(0, sep);
            m.qa_id = key.substr(sep + 1);
            const auto* qa = qa_by_id.count(m.qa_id) ? qa_by_id[m.qa_id] : nullptr;
            if (qa) {
                m.domain = qa->domain;
                m.multi_hop = patterns::is_multi_hop(qa->kind);
            }
            m.closed_book_correct = !vs.empty() && vs.front().closed_book_correct;
            m.overall = evalcore::overall_robustness(vs);
            m.query = evalcore::query_robustness(vs);
            m.document = evalcore::document_robustness(vs);
            m.retrieval = evalcore::retrieval_robustness(vs);
            out.push_back(std::move(m));
        }
        return out;
    }

private:
    evalcore::RobustnessReport build_report(bool lenient) {
        auto metrics = metrics_from_verdicts(lenient);
        std::vector<evalcore::JudgeVerdict> verdicts;
        for (const auto& row : jsonl::read_all(verdicts_path())) {
            auto v = evalcore::JudgeVerdict::from_json(row);
            v.f = lenient ? v.f_lenient : v.f_strict;
            verdicts.push_back(std::move(v));
        }
        return evalcore::aggregate_report(metrics, verdicts);
    }

    // ------------------------------------------------------------------
    // Providers
    // ------------------------------------------------------------------

    std::shared_ptr<providers::ChatBackend> role_backend(const config::ProviderRoleConfig& role) {
        if (!role.fixtures.empty()) return std::make_shared<mock::JsonlChatBackend>(role.fixtures);
        if (cfg_.mock) return shared_rule_mock();
        return std::make_shared<providers::HttpChatBackend>(role.base_url, role.api_key);
    }
    std::shared_ptr<providers::ChatBackend> extractor_backend() { return role_backend(cfg_.extractor); }
    std::shared_ptr<providers::ChatBackend> qa_judge_backend() { return role_backend(cfg_.qa_judge); }
    std::shared_ptr<providers::ChatBackend> perturber_backend() { return role_backend(cfg_.perturber); }
    std::shared_ptr<providers::ChatBackend> generator_backend(const std::string& model) {
        if (!cfg_.generator_endpoint.fixtures.empty()) {
            return std::make_shared<mock::JsonlChatBackend>(cfg_.generator_endpoint.fixtures);
        }
        if (cfg_.mock) {
            return mock::make_rule_mock(mock::generator_mode_from_model(model), qa_accepted_path(),
                                        query_variants_path());
        }
        return std::make_shared<providers::HttpChatBackend>(cfg_.generator_endpoint.base_url,
                                                            cfg_.generator_endpoint.api_key);
    }

    std::shared_ptr<providers::ChatClient> chat_client(std::shared_ptr<providers::ChatBackend> be) {
        return std::make_shared<providers::ChatClient>(std::move(be), cache_, providers::RetryPolicy{},
                                                       limiter_);
    }

    std::shared_ptr<providers::EmbedClient> embed_client() {
        if (!embed_client_) {
            std::shared_ptr<providers::EmbedBackend> be;
            if (cfg_.mock) {
                be = std::make_shared<mock::BowEmbedBackend>();
            } else {
                be = std::make_shared<providers::HttpEmbedBackend>(cfg_.embedding_endpoint.base_url,
                                                                   cfg_.embedding_endpoint.api_key);
            }
            embed_client_ = std::make_shared<providers::EmbedClient>(be, cache_,
                                                                     providers::RetryPolicy{}, limiter_);
        }
        return embed_client_;
    }

    std::shared_ptr<providers::ChatBackend> shared_rule_mock() {
        if (!rule_mock_) rule_mock_ = std::make_shared<mock::RuleMockChat>();
        return rule_mock_;
    }

    // ------------------------------------------------------------------
    // Stage plumbing
    // ------------------------------------------------------------------

    void require(const fs::path& artifact, const std::string& producing_stage) {
        if (!fs::exists(artifact)) {
            throw MissingArtifact(producing_stage, artifact.string());
        }
    }

    /// Returns true when the stage ran (false = skipped via manifest).
    template <typename Fn>
    bool run_stage(const std::string& name, const std::vector<fs::path>& inputs,
                   const std::vector<fs::path>& outputs, bool force, Fn body) {
        if (!force && manifest::stage_up_to_date(manifest_, name, config_digest_, inputs, outputs)) {
            log::info(name, ": up to date, skipped");
            return false;
        }
        body();
        manifest::record_stage(manifest_, name, config_digest_, inputs, outputs);
        manifest::save_manifest(manifest_path(), manifest_);
        return true;
    }

    std::vector<fs::path> corpus_files() const {
        std::vector<fs::path> files;
        if (!fs::is_directory(cfg_.corpus_dir)) {
            throw ConfigInvalid("corpus dir not found: " + cfg_.corpus_dir.string());
        }
        for (const auto& e : fs::directory_iterator(cfg_.corpus_dir)) {
            if (!e.is_regular_file()) continue;
            auto ext = e.path().extension().string();
            if (ext == ".md" || ext == ".txt" || e.path().filename().string().ends_with(".meta.json")) {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    }

    static std::string edge_key(const kg::Triplet& t) {
        return kg::entity_key(t.entity_1) + "\x1f" + t.relation + "\x1f" + kg::entity_key(t.entity_2) +
               "\x1f" + t.answer_chunk_id;
    }

    static std::map<std::string, std::vector<Chunk>> group_by_doc(const std::vector<Chunk>& chunks) {
        std::map<std::string, std::vector<Chunk>> grouped;
        for (const auto& c : chunks) grouped[c.doc_id].push_back(c);
        for (auto& [_, v] : grouped) {
            std::sort(v.begin(), v.end(),
                      [](const Chunk& a, const Chunk& b) { return a.ordinal < b.ordinal; });
        }
        return grouped;
    }

    static std::map<std::string, const Chunk*> chunk_lookup(const std::vector<Chunk>& chunks) {
        std::map<std::string, const Chunk*> m;
        for (const auto& c : chunks) m[c.chunk_id] = &c;
        return m;
    }

    void load_doc_meta() {
        if (!doc_meta_.empty()) return;
        if (!fs::is_directory(cfg_.corpus_dir)) return;
        for (const auto& doc : ingest::load_corpus(cfg_.corpus_dir, cfg_.default_domain)) {
            doc_meta_[doc.doc_id] = doc.meta;
            doc_domain_[doc.doc_id] = doc.domain;
        }
    }

    uint64_t seed_for(const std::string& qa_id, const std::string& kind) const {
        return hash::fnv1a64(kind, hash::fnv1a64(qa_id, cfg_.perturb_seed));
    }

    config::PipelineConfig cfg_;
    std::string config_digest_;
    manifest::RunManifest manifest_;
    std::shared_ptr<providers::DiskCache> cache_;
    std::shared_ptr<providers::Semaphore> limiter_;
    std::shared_ptr<providers::EmbedClient> embed_client_;
    std::shared_ptr<mock::RuleMockChat> rule_mock_;
    std::map<std::string, DocumentMeta> doc_meta_;
    std::map<std::string, Domain> doc_domain_;
};

} // namespace rare::pipeline
