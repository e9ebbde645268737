#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rare/kgraph.hpp"

namespace rare::patterns {

using kg::KnowledgeGraph;
using kg::Triplet;

enum class PatternKind { single_hop, chained, star, inverted_star };

inline std::string to_string(PatternKind k) {
    switch (k) {
        case PatternKind::single_hop: return "single_hop";
        case PatternKind::chained: return "chained";
        case PatternKind::star: return "star";
        case PatternKind::inverted_star: return "inverted_star";
    }
    return "single_hop";
}

inline PatternKind pattern_kind_from_string(const std::string& s) {
    if (s == "single_hop") return PatternKind::single_hop;
    if (s == "chained") return PatternKind::chained;
    if (s == "star") return PatternKind::star;
    if (s == "inverted_star") return PatternKind::inverted_star;
    throw Error("unknown pattern kind: " + s);
}

inline bool is_multi_hop(PatternKind k) { return k != PatternKind::single_hop; }

struct PatternInstance {
    PatternKind kind = PatternKind::single_hop;
    std::vector<size_t> edge_indices;        // into KnowledgeGraph::edges
    std::optional<std::string> pivot_entity; // surface form; multi-hop only
    std::vector<std::string> chunk_ids;      // ordered, distinct

    json to_json() const {
        json j{{"kind", to_string(kind)},
               {"triplet_indices", edge_indices},
               {"chunk_ids", chunk_ids}};
        if (pivot_entity) j["pivot_entity"] = *pivot_entity;
        return j;
    }

    static PatternInstance from_json(const json& j) {
        PatternInstance p;
        p.kind = pattern_kind_from_string(j.at("kind").get<std::string>());
        p.edge_indices = j.at("triplet_indices").get<std::vector<size_t>>();
        p.chunk_ids = j.at("chunk_ids").get<std::vector<std::string>>();
        if (j.contains("pivot_entity")) p.pivot_entity = j["pivot_entity"].get<std::string>();
        return p;
    }
};

struct PatternOptions {
    size_t max_chain_len = 3;  // edges per chain, enumerated from 2
    size_t min_branches = 2;
    size_t max_branches = 3;
    size_t edge_usage_cap = 5; // per finder call; 0 = unlimited
};

namespace detail {

inline std::vector<std::string> ordered_distinct_chunks(const KnowledgeGraph& g,
                                                        const std::vector<size_t>& edges) {
    std::vector<std::string> out;
    for (size_t i : edges) {
        const auto& id = g.edges[i].answer_chunk_id;
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
    return out;
}

/// Usage-capped instance sink; preserves enumeration order.
struct CapSink {
    explicit CapSink(size_t cap) : cap(cap) {}
    size_t cap;
    std::map<size_t, size_t> usage;
    std::vector<PatternInstance> out;

    void offer(PatternInstance inst) {
        if (cap > 0) {
            for (size_t e : inst.edge_indices) {
                auto it = usage.find(e);
                if (it != usage.end() && it->second >= cap) return;
            }
            for (size_t e : inst.edge_indices) ++usage[e];
        }
        out.push_back(std::move(inst));
    }
};

} // namespace detail

/// Edges (e1, r, e2) where e1 has out-degree 1 / in-degree 0 and e2 has
/// in-degree 1 / out-degree 0. These endpoints admit no other incident
/// edges, so single-hop facts never leak into multi-hop questions.
inline std::vector<PatternInstance> find_single_hop(const KnowledgeGraph& g) {
    std::vector<PatternInstance> out;
    for (size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        std::string k1 = kg::entity_key(e.entity_1);
        std::string k2 = kg::entity_key(e.entity_2);
        if (g.out_deg(k1) == 1 && g.in_deg(k1) == 0 && g.in_deg(k2) == 1 && g.out_deg(k2) == 0) {
            PatternInstance inst;
            inst.kind = PatternKind::single_hop;
            inst.edge_indices = {i};
            inst.chunk_ids = {e.answer_chunk_id};
            out.push_back(std::move(inst));
        }
    }
    return out;
}

/// Simple directed paths of 2..max_chain_len edges linked tail-to-head.
/// Paths whose edges all cite one chunk are dropped (they would be
/// answerable from a single chunk). Pivot is the first bridge entity.
inline std::vector<PatternInstance> find_chained(const KnowledgeGraph& g,
                                                 const PatternOptions& opts = {}) {
    std::map<std::string, std::vector<size_t>> out_edges;
    for (size_t i = 0; i < g.edges.size(); ++i) {
        out_edges[kg::entity_key(g.edges[i].entity_1)].push_back(i);
    }

    detail::CapSink sink(opts.edge_usage_cap);

    std::vector<size_t> path;
    std::set<std::string> visited;

    auto emit = [&] {
        auto chunks = detail::ordered_distinct_chunks(g, path);
        if (chunks.size() < 2) return; // entirely answerable from one chunk
        PatternInstance inst;
        inst.kind = PatternKind::chained;
        inst.edge_indices = path;
        inst.pivot_entity = text::collapse_ws(g.edges[path[0]].entity_2);
        inst.chunk_ids = std::move(chunks);
        sink.offer(std::move(inst));
    };

    std::function<void()> extend = [&] {
        if (path.size() >= 2) emit();
        if (path.size() >= opts.max_chain_len) return;
        const auto& last = g.edges[path.back()];
        auto it = out_edges.find(kg::entity_key(last.entity_2));
        if (it == out_edges.end()) return;
        for (size_t next : it->second) {
            const std::string nk = kg::entity_key(g.edges[next].entity_2);
            if (visited.count(nk)) continue; // simple paths only
            path.push_back(next);
            visited.insert(nk);
            extend();
            visited.erase(nk);
            path.pop_back();
        }
    };

    for (size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        path = {i};
        visited = {kg::entity_key(e.entity_1), kg::entity_key(e.entity_2)};
        extend();
    }
    return std::move(sink.out);
}

namespace detail {

template <typename Emit>
void combinations(const std::vector<size_t>& pool, size_t k, Emit&& emit) {
    if (k > pool.size()) return;
    std::vector<size_t> idx(k);
    for (size_t i = 0; i < k; ++i) idx[i] = i;
    for (;;) {
        std::vector<size_t> combo(k);
        for (size_t i = 0; i < k; ++i) combo[i] = pool[idx[i]];
        emit(combo);
        // next lexicographic index combination
        size_t i = k;
        while (i > 0) {
            --i;
            if (idx[i] != i + pool.size() - k) break;
            if (i == 0) return;
        }
        if (idx[i] == i + pool.size() - k) return;
        ++idx[i];
        for (size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline std::vector<PatternInstance> find_hub(const KnowledgeGraph& g, const PatternOptions& opts,
                                             bool shared_head) {
    // group edges by the shared endpoint, iterated by first-edge order
    std::map<std::string, std::vector<size_t>> grouped;
    std::vector<std::string> hub_order;
    for (size_t i = 0; i < g.edges.size(); ++i) {
        const auto& e = g.edges[i];
        std::string hub = kg::entity_key(shared_head ? e.entity_1 : e.entity_2);
        auto [it, inserted] = grouped.try_emplace(hub);
        if (it->second.empty()) hub_order.push_back(hub);
        it->second.push_back(i);
    }

    CapSink sink(opts.edge_usage_cap);
    for (const auto& hub : hub_order) {
        const auto& pool = grouped[hub];
        if (pool.size() < opts.min_branches) continue;
        for (size_t b = opts.min_branches; b <= opts.max_branches; ++b) {
            combinations(pool, b, [&](const std::vector<size_t>& combo) {
                std::set<std::string> rels;
                for (size_t e : combo) rels.insert(g.edges[e].relation);
                if (rels.size() != combo.size()) return; // relations must be pairwise distinct
                auto chunks = ordered_distinct_chunks(g, combo);
                if (chunks.size() < 2) return;
                PatternInstance inst;
                inst.kind = shared_head ? PatternKind::star : PatternKind::inverted_star;
                inst.edge_indices = combo;
                inst.pivot_entity = g.nodes.at(hub);
                inst.chunk_ids = std::move(chunks);
                sink.offer(std::move(inst));
            });
        }
    }
    return std::move(sink.out);
}

} // namespace detail

/// 2-3 out-edges of one head with pairwise-distinct relations spanning
/// at least two chunks; pivot is the head.
inline std::vector<PatternInstance> find_star(const KnowledgeGraph& g,
                                              const PatternOptions& opts = {}) {
    return detail::find_hub(g, opts, /*shared_head=*/true);
}

/// Mirror of find_star over in-edges of one tail; pivot is the tail.
inline std::vector<PatternInstance> find_inverted_star(const KnowledgeGraph& g,
                                                       const PatternOptions& opts = {}) {
    return detail::find_hub(g, opts, /*shared_head=*/false);
}

inline Domain domain_from_chunk_id(const std::string& chunk_id) {
    auto pos = chunk_id.find('_');
    if (pos == std::string::npos) return Domain::other;
    std::string prefix = chunk_id.substr(0, pos);
    if (prefix == "finance") return Domain::finance;
    if (prefix == "economics") return Domain::economics;
    if (prefix == "policy") return Domain::policy;
    return Domain::other;
}

/// Counts per (domain, kind); domain read from the first chunk id.
inline std::map<std::string, std::map<std::string, size_t>>
pattern_stats(const std::vector<PatternInstance>& instances) {
    std::map<std::string, std::map<std::string, size_t>> stats;
    for (const char* kind : {"single_hop", "chained", "star", "inverted_star"}) {
        stats["total"][kind] = 0;
    }
    for (const auto& inst : instances) {
        std::string domain = inst.chunk_ids.empty()
                                 ? "other"
                                 : rare::to_string(domain_from_chunk_id(inst.chunk_ids[0]));
        ++stats[domain][to_string(inst.kind)];
        ++stats["total"][to_string(inst.kind)];
    }
    return stats;
}

} // namespace rare::patterns
