#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rare/core.hpp"
#include "rare/log.hpp"
#include "rare/prompts.hpp"
#include "rare/providers.hpp"
#include "rare/text.hpp"

namespace rare::kg {

struct Triplet {
    std::string entity_1;
    std::string relation;
    std::string entity_2;
    std::string answer_chunk_id;
    std::string source_sentence; // verbatim from the chunk
    std::string doc_id;

    json to_json() const {
        return json{{"entity_1", entity_1},   {"relation", relation},
                    {"entity_2", entity_2},   {"answer_chunk_id", answer_chunk_id},
                    {"source_sentence", source_sentence}, {"doc_id", doc_id}};
    }

    static Triplet from_json(const json& j) {
        Triplet t;
        t.entity_1 = j.at("entity_1").get<std::string>();
        t.relation = j.at("relation").get<std::string>();
        t.entity_2 = j.at("entity_2").get<std::string>();
        t.answer_chunk_id = j.at("answer_chunk_id").get<std::string>();
        t.source_sentence = j.at("source_sentence").get<std::string>();
        t.doc_id = j.value("doc_id", "");
        return t;
    }
};

/// Entities match case-insensitively with trimmed/collapsed whitespace.
inline std::string entity_key(const std::string& s) {
    return text::lower(text::collapse_ws(s));
}

struct RelationCluster {
    std::string canonical;
    std::vector<std::string> members;
    std::vector<double> centroid; // embedding of the founding member

    json to_json() const {
        return json{{"canonical", canonical}, {"members", members}};
    }
};

struct KnowledgeGraph {
    std::map<std::string, std::string> nodes; // key -> first-seen surface form
    std::vector<Triplet> edges;               // canonical relations, deduplicated
    std::map<std::string, size_t> in_degree;  // by node key
    std::map<std::string, size_t> out_degree;

    size_t in_deg(const std::string& key) const {
        auto it = in_degree.find(key);
        return it == in_degree.end() ? 0 : it->second;
    }
    size_t out_deg(const std::string& key) const {
        auto it = out_degree.find(key);
        return it == out_degree.end() ? 0 : it->second;
    }
};

// ---------------------------------------------------------------------------
// Window extraction
// ---------------------------------------------------------------------------

/// Consecutive chunk windows of size n with the given stride. The final
/// window is pulled back so trailing chunks are always covered.
inline std::vector<std::vector<Chunk>> windows(const std::vector<Chunk>& doc_chunks,
                                               size_t n, size_t stride) {
    std::vector<std::vector<Chunk>> out;
    if (doc_chunks.empty() || n == 0 || stride == 0) return out;
    if (doc_chunks.size() <= n) {
        out.push_back(doc_chunks);
        return out;
    }
    for (size_t start = 0;; start += stride) {
        if (start + n >= doc_chunks.size()) {
            size_t last = doc_chunks.size() - n;
            out.emplace_back(doc_chunks.begin() + last, doc_chunks.begin() + last + n);
            break;
        }
        out.emplace_back(doc_chunks.begin() + start, doc_chunks.begin() + start + n);
    }
    return out;
}

/// Prompt an LLM for triplets over one chunk window and keep only those whose
/// source sentence is verbatim-contained (modulo whitespace) in the chunk
/// they cite. Returns an empty list when the model yields no JSON.
inline std::vector<Triplet> extract_window(const std::vector<Chunk>& window, Domain domain,
                                           providers::ChatClient& chat, const std::string& model) {
    providers::ChatRequest req;
    req.model = model;
    req.system_prompt = prompts::extraction_system(domain);
    req.user_prompt = prompts::extraction_user(window);
    auto resp = chat.chat(req);

    json parsed;
    try {
        parsed = providers::extract_json(resp.text);
    } catch (const NoJsonFound&) {
        log::warn("extraction returned no JSON for window starting at ",
                  window.empty() ? "?" : window.front().chunk_id);
        return {};
    }
    if (parsed.is_object() && parsed.contains("triplets")) parsed = parsed["triplets"];
    if (!parsed.is_array()) {
        log::warn("extraction JSON is not an array; dropping window");
        return {};
    }

    std::map<std::string, const Chunk*> by_id;
    for (const auto& c : window) by_id[c.chunk_id] = &c;

    std::vector<Triplet> out;
    for (const auto& item : parsed) {
        if (!item.is_object()) continue;
        Triplet t;
        t.entity_1 = text::trim(item.value("entity_1", ""));
        t.relation = text::trim(item.value("relation", ""));
        t.entity_2 = text::trim(item.value("entity_2", ""));
        t.answer_chunk_id = text::trim(item.value("answer_chunk_id", ""));
        t.source_sentence = text::trim(item.value("source_sentence", ""));
        if (t.entity_1.empty() || t.relation.empty() || t.entity_2.empty() ||
            t.answer_chunk_id.empty() || t.source_sentence.empty()) {
            log::warn("dropping incomplete triplet: ", item.dump().substr(0, 120));
            continue;
        }
        auto it = by_id.find(t.answer_chunk_id);
        if (it == by_id.end()) {
            log::warn("dropping triplet citing unknown chunk ", t.answer_chunk_id);
            continue;
        }
        if (!text::contains_ws_normalized(it->second->text, t.source_sentence)) {
            log::warn("dropping triplet whose source sentence is absent from ", t.answer_chunk_id);
            continue;
        }
        t.doc_id = it->second->doc_id;
        out.push_back(std::move(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Relation normalization
// ---------------------------------------------------------------------------

/// Greedy agglomeration in frequency order: a relation joins the first
/// cluster whose centroid (the founding member's embedding) has cosine
/// >= tau, else founds a new cluster. Processing most-frequent-first makes
/// each founder its cluster's most frequent member, so the canonical label
/// is the founder and a second pass is a no-op.
inline std::pair<std::vector<Triplet>, std::vector<RelationCluster>>
normalize_relations(const std::vector<Triplet>& triplets, providers::EmbedClient& embedder,
                    const std::string& model, double tau) {
    std::map<std::string, size_t> freq;
    for (const auto& t : triplets) ++freq[t.relation];

    std::vector<std::string> order;
    order.reserve(freq.size());
    for (const auto& [rel, _] : freq) order.push_back(rel);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        if (freq[a] != freq[b]) return freq[a] > freq[b];
        return a < b;
    });

    std::vector<RelationCluster> clusters;
    std::map<std::string, size_t> cluster_of;
    for (const auto& rel : order) {
        auto emb = embedder.embed_single(model, rel);
        bool joined = false;
        for (size_t i = 0; i < clusters.size(); ++i) {
            if (providers::cosine(emb.values, clusters[i].centroid) >= tau) {
                clusters[i].members.push_back(rel);
                cluster_of[rel] = i;
                joined = true;
                break;
            }
        }
        if (!joined) {
            RelationCluster c;
            c.members.push_back(rel);
            c.centroid = emb.values;
            cluster_of[rel] = clusters.size();
            clusters.push_back(std::move(c));
        }
    }

    for (auto& c : clusters) {
        std::string best;
        size_t best_freq = 0;
        for (const auto& m : c.members) {
            size_t f = freq[m];
            if (f > best_freq || (f == best_freq && (best.empty() || m < best))) {
                best = m;
                best_freq = f;
            }
        }
        c.canonical = best;
    }

    std::vector<Triplet> rewritten = triplets;
    for (auto& t : rewritten) t.relation = clusters[cluster_of[t.relation]].canonical;
    return {std::move(rewritten), std::move(clusters)};
}

// ---------------------------------------------------------------------------
// Graph building and merging
// ---------------------------------------------------------------------------

inline KnowledgeGraph build_graph(const std::vector<Triplet>& triplets) {
    KnowledgeGraph g;
    std::set<std::string> seen;
    for (const auto& t : triplets) {
        std::string k1 = entity_key(t.entity_1);
        std::string k2 = entity_key(t.entity_2);
        std::string dedup = k1 + "\x1f" + t.relation + "\x1f" + k2 + "\x1f" + t.answer_chunk_id;
        if (!seen.insert(dedup).second) continue;
        g.nodes.try_emplace(k1, text::collapse_ws(t.entity_1));
        g.nodes.try_emplace(k2, text::collapse_ws(t.entity_2));
        g.edges.push_back(t);
        ++g.out_degree[k1];
        ++g.in_degree[k2];
    }
    return g;
}

inline KnowledgeGraph merge_graphs(const std::vector<KnowledgeGraph>& graphs) {
    std::vector<Triplet> all;
    for (const auto& g : graphs) {
        all.insert(all.end(), g.edges.begin(), g.edges.end());
    }
    return build_graph(all); // union + dedup + degree recomputation
}

inline json graph_to_json(const KnowledgeGraph& g, const std::vector<RelationCluster>& clusters) {
    json nodes = json::array();
    for (const auto& [key, display] : g.nodes) {
        nodes.push_back(json{{"key", key},
                             {"display", display},
                             {"in_degree", g.in_deg(key)},
                             {"out_degree", g.out_deg(key)}});
    }
    json edges = json::array();
    for (const auto& e : g.edges) edges.push_back(e.to_json());
    json cl = json::array();
    for (const auto& c : clusters) cl.push_back(c.to_json());
    return json{{"nodes", nodes}, {"edges", edges}, {"clusters", cl}};
}

inline KnowledgeGraph graph_from_json(const json& j) {
    std::vector<Triplet> edges;
    for (const auto& e : j.at("edges")) edges.push_back(Triplet::from_json(e));
    return build_graph(edges);
}

} // namespace rare::kg
